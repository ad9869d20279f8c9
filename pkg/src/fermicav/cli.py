"""Command-line interface.

Every run writes its data files plus ``manifest.json`` (command, resolved
configuration, seed, library version and a SHA-256 per output file) into
``--out``. Outputs depend only on the configuration, so identical runs are
byte-identical. Exit codes: 0 success, 1 usage error, 2 domain error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__

BACKENDS = {"local": "local", "cavity-series": "cavity_series", "cavity-parallel": "cavity_parallel"}


class UsageError(Exception):
    """Bad command line or configuration file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


@dataclass
class RunConfig:
    """Resolved run configuration and the files it produced."""

    command: str
    options: dict
    seed: int
    out: Path
    files: dict[str, str] = field(default_factory=dict)

    def write(self, name: str, text: str) -> None:
        self.files[name] = text

    def flush(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text, encoding="utf-8")
        manifest = {
            "command": self.command,
            "config": self.options,
            "seed": self.seed,
            "version": __version__,
            "outputs": {n: hashlib.sha256(t.encode()).hexdigest() for n, t in sorted(self.files.items())},
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# shared helpers


def _csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.10g}" if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _json(obj: object) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _int_range(text: str) -> list[int]:
    """``2..8`` or ``2,3,5``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x]
    except ValueError as e:
        raise UsageError(f"bad integer range {text!r}") from e


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as e:
        raise UsageError(f"bad number list {text!r}") from e


def _backend_kind(name: str) -> str:
    if name not in BACKENDS:
        raise UsageError(f"unknown backend {name!r}; choose from {', '.join(BACKENDS)}")
    return BACKENDS[name]


@dataclass
class _Model:
    h: object
    labels: tuple[str, ...] | None
    rows: tuple[int, ...] | None
    encoding: object | None
    n_particles: int | None


def _model(a: argparse.Namespace) -> _Model:
    from .fermion_encoding import Encoding
    from .models import HubbardSpec, build_hubbard, encode_hubbard, load_pauli_hamiltonian

    if a.hamiltonian:
        return _Model(load_pauli_hamiltonian(a.hamiltonian), None, None, None, None)
    if a.model != "hubbard":
        raise UsageError("--model hubbard or --hamiltonian FILE is required")
    spec = HubbardSpec(a.nx, a.ny, a.kappa, a.u)
    kind = a.encoding.upper()
    lab = encode_hubbard(spec, kind)
    _, order, _ = build_hubbard(spec)
    n_el = a.electrons if a.electrons is not None else spec.n_sites
    return _Model(lab.hamiltonian, lab.labels, lab.rows, Encoding(kind, order), n_el)


def _groups(a: argparse.Namespace, m: _Model):
    from .models import TERM_LABELS
    from .scheduler import partition_by_labels, partition_commuting

    if a.groups == "labels":
        if m.labels is None:
            raise UsageError("--groups labels needs a lattice model")
        return partition_by_labels(m.h, m.labels, TERM_LABELS)
    if a.groups == "greedy":
        return partition_commuting(m.h)
    if a.groups == "exhaustive":
        return partition_commuting(m.h, "exhaustive")
    raise UsageError(f"unknown grouping {a.groups!r}")


def _initial(m: _Model) -> tuple[float, np.ndarray]:
    """Ground state: of the filling sector for lattice models, global otherwise."""
    from .fermion_encoding import number_operator
    from .simulator import exact_diagonalize, sector_ground_state

    if m.encoding is not None:
        return sector_ground_state(m.h, number_operator(range(m.h.n_qubits), m.encoding), m.n_particles)
    e, v = exact_diagonalize(m.h)
    return float(e[0]), v[:, 0]


def _backend(a: argparse.Namespace):
    from .backends import Backend

    if a.backend == "exact":
        return None
    kind = _backend_kind(a.backend)
    return Backend(kind, n_ancillae=a.n_ancillae, reset_ancillae=a.reset_ancillae and kind != "local")


def _noise(a: argparse.Namespace):
    from .simulator import NoiseModel, TrajectoryConfig

    nm = NoiseModel.preset(a.noise)
    if nm.is_zero:
        return None, None
    if a.backend == "exact":
        raise UsageError("noise needs a compiled backend, not --backend exact")
    return nm, TrajectoryConfig(a.trajectories, a.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_encode(a: argparse.Namespace, rc: RunConfig) -> None:
    from .models import format_pauli_hamiltonian, stats

    m = _model(a)
    rc.write("terms.txt", format_pauli_hamiltonian(m.h))
    d = stats(m.h).as_dict()
    d["n_qubits"] = m.h.n_qubits
    rc.write("stats.json", _json(d))


def cmd_compile(a: argparse.Namespace, rc: RunConfig) -> None:
    from .backends import Backend, TrotterSpec, compile_trotter
    from .circuits import metrics

    m = _model(a)
    kind = _backend_kind(a.backend)
    groups = tuple(_groups(a, m))
    b = Backend(kind, n_ancillae=a.n_ancillae, reset_ancillae=a.reset_ancillae and kind != "local")
    c = compile_trotter(m.h, TrotterSpec(a.dt, a.steps, grouping=groups, repack=True), b)
    rc.write("circuit.txt", c.dump())
    rc.write("metrics.json", metrics(c, b.device).to_json() + "\n")


def cmd_depth_scan(a: argparse.Namespace, rc: RunConfig) -> None:
    from .backends import fit_exponent, hubbard_depth_scan

    if a.model != "hubbard":
        raise UsageError("depth-scan supports --model hubbard")
    Ns = _int_range(a.n)
    kinds = [_backend_kind(k) for k in a.backends.split(",") if k]
    rows = hubbard_depth_scan(Ns, kinds, encoding=a.encoding.upper())
    rc.write(
        "depth_scan.csv",
        _csv(
            ["N", "backend", "n_qubits", "n_terms", "n_groups", "depth", "duration_ns", "local_pulses",
             "collective_pulses", "pulse_fidelity_estimate"],
            [[r.N, r.backend, r.n_qubits, r.n_terms, r.n_groups, r.depth, float(r.duration_ns), r.local_pulses,
              r.collective_pulses, float(r.pulse_fidelity_estimate)] for r in rows],
        ),
    )
    fits = {}
    if len(Ns) > 1:
        for k in kinds:
            sel = [r for r in rows if r.backend == k]
            fits[k] = {
                "depth_exponent": fit_exponent([r.N for r in sel], [r.depth for r in sel]),
                "duration_exponent": fit_exponent([r.N for r in sel], [r.duration_ns for r in sel]),
            }
    rc.write("exponents.json", _json(fits))


def cmd_pea(a: argparse.Namespace, rc: RunConfig) -> None:
    from .protocols import kitaev_pea

    m = _model(a)
    e0, psi = _initial(m)
    nm, cfg = _noise(a)
    groups = tuple(_groups(a, m))
    r = kitaev_pea(m.h, psi, a.dt, a.steps, _backend(a), nm, cfg, groups, subtract_diagonal=a.subtract_diagonal)
    se_re = r.stderr_re if r.stderr_re is not None else np.zeros_like(r.re_za)
    se_im = r.stderr_im if r.stderr_im is not None else np.zeros_like(r.im_za)
    t_ns = r.times_ns if r.times_ns is not None else np.full_like(r.times, np.nan)
    rc.write(
        "pea_timeseries.csv",
        _csv(["t", "t_ns", "re_za", "im_za", "stderr_re", "stderr_im"],
             [[float(v) for v in row] for row in zip(r.times, t_ns, r.re_za, r.im_za, se_re, se_im)]),
    )
    sp = r.spectrum
    rc.write(
        "pea_spectrum.csv",
        _csv(["omega", "omega_half", "magnitude"],
             [[float(w), float(w / 2 + r.shift), float(v)] for w, v in zip(sp.omega, sp.magnitude)]),
    )
    rc.write(
        "pea_peaks.csv",
        _csv(["omega", "omega_half", "height", "fraction"],
             [[p.omega, p.omega / 2 + r.shift, p.height, p.fraction] for p in r.peaks]),
    )
    rc.write("pea_reference.json", _json({"exact_energy": e0, "bin_width": float(sp.bin_width)}))


def cmd_spectral(a: argparse.Namespace, rc: RunConfig) -> None:
    from .protocols import dynamical_correlator, spectral_function, spectral_peaks

    m = _model(a)
    if m.encoding is None:
        raise UsageError("spectral needs a lattice model (mode operators)")
    _, psi = _initial(m)
    nm, cfg = _noise(a)
    groups = tuple(_groups(a, m))
    c = dynamical_correlator(m.h, psi, a.site, a.site, a.dt, a.steps, m.encoding, _backend(a), nm, cfg, groups)
    om = np.linspace(a.omega_min, a.omega_max, a.omega_points)
    spec = spectral_function(c, om, a.eta)
    rc.write(
        "correlator.csv",
        _csv(["t", "re_qq", "im_qq", "re_qp", "im_qp"],
             [[float(t), float(x.real), float(x.imag), float(y.real), float(y.imag)] for t, x, y in zip(c.times, c.qq, c.qp)]),
    )
    rc.write("spectral.csv", _csv(["omega", "A"], [[float(w), float(v)] for w, v in zip(om, spec)]))
    rc.write("spectral_peaks.csv", _csv(["omega", "height"], [[p.omega, p.height] for p in spectral_peaks(om, spec)]))


def cmd_ipea(a: argparse.Namespace, rc: RunConfig) -> None:
    from .protocols import ipea

    m = _model(a)
    e0, psi = _initial(m)
    r = ipea(m.h, psi, a.bits, a.t0, _backend(a), a.dt, a.mode, np.random.default_rng(a.seed))
    ref = (-e0 * a.t0 / (2 * np.pi)) % 1.0
    rc.write("ipea.json", _json({"bits": list(r.bits), "phase": r.phase, "reference_phase": ref,
                                 "probabilities": list(r.probabilities)}))


def cmd_fluxonium(a: argparse.Namespace, rc: RunConfig) -> None:
    from .device_physics import sweep, sweep_csv

    rows = sweep(_floats(a.ej), a.ec, a.el, a.flux, a.g, a.omega, a.basis)
    rc.write("fluxonium_sweep.csv", sweep_csv(rows))


# ---------------------------------------------------------------------------
# parser


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="hubbard", choices=["hubbard"])
    p.add_argument("--hamiltonian", default=None, help="Pauli Hamiltonian file (overrides --model)")
    p.add_argument("--nx", type=int, default=2)
    p.add_argument("--ny", type=int, default=2)
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--u", type=float, default=1.0)
    p.add_argument("--electrons", type=int, default=None, help="filling sector (default: half filling)")
    p.add_argument("--encoding", default="jw", choices=["jw", "bk"])


def _run_flags(p: argparse.ArgumentParser, backend_default: str = "cavity-parallel") -> None:
    p.add_argument("--backend", default=backend_default, choices=["exact", *BACKENDS])
    p.add_argument("--groups", default="labels", choices=["labels", "greedy", "exhaustive"])
    p.add_argument("--n-ancillae", type=int, default=4)
    p.add_argument("--reset-ancillae", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--noise", default="none", choices=["none", "fig5"])
    p.add_argument("--trajectories", type=int, default=50)


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], None]] = {
    "encode": cmd_encode,
    "compile": cmd_compile,
    "depth-scan": cmd_depth_scan,
    "pea": cmd_pea,
    "spectral": cmd_spectral,
    "ipea": cmd_ipea,
    "fluxonium": cmd_fluxonium,
}


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="fermicav", description="Fermionic simulation compiler for cavity-QED hardware.")
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="key = value file; explicit flags win")
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = add("encode", "encode a model into Pauli terms with grouping statistics")
    _model_flags(p)

    p = add("compile", "compile Trotter steps and report metrics")
    _model_flags(p)
    p.add_argument("--backend", default="cavity-parallel", choices=list(BACKENDS))
    p.add_argument("--groups", default="labels", choices=["labels", "greedy", "exhaustive"])
    p.add_argument("--n-ancillae", type=int, default=None)
    p.add_argument("--reset-ancillae", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=1)

    p = add("depth-scan", "per-step depth, duration and fidelity over Hubbard N x N")
    p.add_argument("--model", default="hubbard", choices=["hubbard"])
    p.add_argument("--n", default="2..8")
    p.add_argument("--backends", default="local,cavity-series,cavity-parallel")
    p.add_argument("--encoding", default="jw", choices=["jw", "bk"])

    p = add("pea", "Ramsey phase estimation time series, spectrum and peaks")
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--dt", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--subtract-diagonal", action=argparse.BooleanOptionalAction, default=False)

    p = add("spectral", "dynamical correlator and spectral function")
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--site", type=int, default=0, help="mode index i = j")
    p.add_argument("--dt", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--omega-min", type=float, default=-2.0)
    p.add_argument("--omega-max", type=float, default=2.0)
    p.add_argument("--omega-points", type=int, default=801)

    p = add("ipea", "iterative phase estimation of the ground state")
    _model_flags(p)
    p.add_argument("--backend", default="exact", choices=["exact", *BACKENDS])
    p.add_argument("--n-ancillae", type=int, default=4)
    p.add_argument("--reset-ancillae", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--bits", type=int, default=8)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--mode", default="argmax", choices=["argmax", "sample"])

    p = add("fluxonium", "fluxonium levels and phase matrix elements over E_J")
    p.add_argument("--ec", type=float, default=0.5)
    p.add_argument("--el", type=float, default=0.75)
    p.add_argument("--flux", type=float, default=0.4)
    p.add_argument("--ej", default="4,8,12,16,20", help="comma-separated E_J values (GHz)")
    p.add_argument("--g", type=float, default=0.1)
    p.add_argument("--omega", type=float, default=7.0)
    p.add_argument("--basis", type=int, default=120)
    return top


def read_config(path: str) -> list[str]:
    """``key = value`` lines as flag tokens; booleans become ``--key`` / ``--no-key``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config {path!r}: {e}") from e
    tokens: list[str] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        flag = "--" + k.replace("_", "-")
        if v.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif v.lower() in ("false", "no", "off"):
            tokens.append("--no-" + k.replace("_", "-"))
        else:
            tokens += [flag, v]
    return tokens


def _merge_config(argv: list[str]) -> list[str]:
    """Insert config-file tokens right after the subcommand so explicit flags override them."""
    if not argv or argv[0] not in COMMANDS:
        return argv
    cfg = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            cfg = argv[i + 1]
        elif tok.startswith("--config="):
            cfg = tok.split("=", 1)[1]
    if cfg is None:
        return argv
    return [argv[0], *read_config(cfg), *argv[1:]]


def main(argv: Sequence[str] | None = None) -> int:
    from .models import HamiltonianFormatError, HamiltonianParseError

    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if not argv:
            raise UsageError(parser.format_usage())
        args = parser.parse_args(_merge_config(argv))
        if args.command is None:
            raise UsageError(parser.format_usage())
        opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "out", "config")}
        rc = RunConfig(args.command, opts, args.seed, Path(args.out))
        COMMANDS[args.command](args, rc)
        rc.flush()
    except UsageError as e:
        print(str(e).rstrip(), file=sys.stderr)
        return 1
    except (HamiltonianParseError, HamiltonianFormatError, ValueError, OSError, ArithmeticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for name in sorted(rc.files):
        print(str(rc.out / name))
    return 0


if __name__ == "__main__":
    sys.exit(main())
