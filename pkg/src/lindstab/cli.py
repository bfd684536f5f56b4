"""Command-line front end.

Exit status: 0 on success, 1 when a requested certificate comes out with
``gas`` not true, 2 on invalid input (bad flags, config, files or values).
Any flag may also be given in a ``--config`` file of ``key = value`` lines,
keys spelled like the long option without dashes (``auto_M``, ``out_dir``);
command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as lio
from .core import BlockSplit, diag_state
from .dynamics import build_liouvillian, integrate
from .errors import ConfigParse, LindstabError
from .feedback import demo_setup, practical_stabilize, synth_feedback
from .sampling import random_config, random_state, rng
from .synthesis import SynthesisConfig, synthesize
from .tridiag import TridiagonalReal, eigensolve
from .verify import certify, target_basis

log = logging.getLogger("lindstab")

EXIT_OK, EXIT_UNCERTIFIED, EXIT_INPUT = 0, 1, 2


def _floats(value, name):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [float(x) for x in value]
    return lio.parse_floats(str(value), name)


def _positive(value, name):
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"{name}: {exc}") from exc
    if not v > 0:
        raise ConfigParse(f"{name} must be positive, got {value}")
    return v


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    s = str(value).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ConfigParse(f"not a boolean: {value!r}")


def _target(args):
    if args.target:
        return lio.load_density(args.target)
    p = _floats(args.spectrum, "spectrum")
    if p is None:
        raise ConfigParse("need --target or --spectrum")
    return diag_state(p)


def cmd_synthesize(args) -> int:
    p = _floats(args.spectrum, "spectrum")
    if p is None:
        raise ConfigParse("synthesize needs --spectrum")
    auto = _bool(args.auto_M)
    a = _floats(args.a, "a")
    h = _floats(args.h, "h")
    if not auto and h is not None and len(h) != len(p):
        raise ConfigParse(f"--h has {len(h)} entries, spectrum has {len(p)}")
    cfg = SynthesisConfig(p, a_diag=a, h_diag=h, auto_m=auto)
    res = synthesize(cfg)
    prov = {
        "spectrum": [float(x) for x in cfg.spectrum],
        "a": [float(x) for x in cfg.a_diag],
        "h": [float(x) for x in res.h_diag],
        "auto_M": auto,
        "M0": res.m0,
        "M": res.m,
    }
    out = Path(args.out_dir)
    h_obj = lio.matrix_to_obj(res.pair.hamiltonian)
    l_obj = lio.matrix_to_obj(res.pair.lindblad)
    lio.write_json(out / "H.json", {"provenance": prov, **h_obj})
    lio.write_json(out / "L.json", {"provenance": prov, **l_obj})
    lio.write_json(out / "pair.json", lio.pair_to_obj(res.pair, prov))
    print(f"wrote {out / 'pair.json'} (M0={res.m0}, M={res.m})")
    return EXIT_OK


def cmd_verify(args) -> int:
    if not args.pair:
        raise ConfigParse("verify needs --pair")
    pair, prov = lio.load_pair(args.pair)
    target = _target(args)
    cfg = None
    if prov.get("spectrum") is not None and prov.get("a") is not None and target.dim == pair.dim:
        cfg = SynthesisConfig(prov["spectrum"], a_diag=prov["a"], h_diag=prov.get("h"))
    cert = certify(target, pair, cfg)
    text = lio.dumps(cert.to_dict())
    if args.out:
        lio.write_text(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK if cert.gas is True else EXIT_UNCERTIFIED


def cmd_simulate(args) -> int:
    if not args.pair:
        raise ConfigParse("simulate needs --pair")
    horizon = _positive(args.horizon, "horizon")
    dt = None if args.dt is None else _positive(args.dt, "dt")
    pair, _ = lio.load_pair(args.pair)
    target = _target(args)
    if args.rho0:
        rho0 = lio.load_density(args.rho0)
    else:
        rho0 = random_state(rng(int(args.seed)), pair.dim)
    if dt is not None and dt > horizon:
        raise ConfigParse("dt exceeds horizon")
    trace = integrate(pair, rho0, horizon, dt=dt, target=target, n_records=int(args.records))
    text = lio.trace_csv(trace, target, target_basis(target))
    if args.out:
        lio.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if not args.pair:
        raise ConfigParse("spectrum needs --pair")
    pair, _ = lio.load_pair(args.pair)
    lam = build_liouvillian(pair).eigenvalues
    lam = lam[np.lexsort((lam.imag, lam.real))]
    text = lio.eigenvalue_csv(lam)
    if args.out:
        lio.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eigensolve(args) -> int:
    alpha = _floats(args.alpha, "alpha")
    if alpha is None:
        raise ConfigParse("eigensolve needs --alpha")
    n = len(alpha)
    beta = _floats(args.beta, "beta") if n > 1 else []
    gamma = _floats(args.gamma, "gamma") if n > 1 else []
    if beta is None or gamma is None:
        raise ConfigParse("eigensolve needs --beta and --gamma for N > 1")
    es = eigensolve(TridiagonalReal(alpha, beta, gamma))
    obj = {
        "eigenvalues": [float(x) for x in es.eigenvalues],
        "eigenvectors": [[float(x) for x in es.eigenvectors[:, k]] for k in range(es.dim)],
        "residuals": [float(x) for x in es.residuals],
    }
    text = lio.dumps(obj)
    if args.out:
        lio.write_text(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_feedback_demo(args) -> int:
    p1 = float(args.p1)
    if not 0 < p1 < 1:
        raise ConfigParse(f"p1 must lie in (0, 1), got {p1}")
    m_in = (float(args.m1), float(args.m2), float(args.m3))
    setup = demo_setup(m_in=m_in, m_cross=float(args.m_cross))
    p = (p1, 1 - p1)
    if abs(m_in[2]) > 1e-12:
        res = synth_feedback(p, setup)
        distance = 0.0
    else:
        prac = practical_stabilize(p, setup, _positive(args.epsilon, "epsilon"))
        res, distance = prac.result, prac.distance
    cert = res.certificate
    out = Path(args.out_dir)
    cert_obj = cert.to_dict()
    cert_obj["notes"] = cert_obj["notes"] + [f"k_M={res.k_m!r}", f"target trace distance from requested={distance!r}"]
    lio.write_json(out / "certificate.json", cert_obj)
    lio.write_json(out / "closed_loop.json", lio.pair_to_obj(res.setup.closed_loop(), {"k_M": res.k_m, "p": list(p)}))
    if cert.gap:
        horizon = _positive(args.horizon, "horizon") if args.horizon is not None else 50.0 / cert.gap
        split = BlockSplit.standard(2, 4)
        rho0 = diag_state(np.diag(split.proj_r).real / 2)
        trace = integrate(res.setup.closed_loop(), rho0, horizon, target=res.target, n_records=int(args.records))
        lio.write_text(out / "convergence.csv", lio.trace_csv(trace, res.target, target_basis(res.target)))
    print(f"gas={cert.gas} gap={cert.gap} k_M={res.k_m:.6g}; wrote {out}")
    return EXIT_OK if cert.gas is True else EXIT_UNCERTIFIED


def sweep_trial(n: int, seed: int, trial: int) -> dict:
    cfg = random_config(rng(seed, trial), n)
    res = synthesize(cfg)
    cert = certify(diag_state(cfg.spectrum), res.pair)
    return {"trial": trial, "gas": cert.gas, "kernel_dim": cert.kernel_dim, "gap": cert.gap,
            "residual": cert.stationarity_residual}


def cmd_sweep(args) -> int:
    n, trials, seed, jobs = int(args.n), int(args.trials), int(args.seed), int(args.jobs)
    if n < 1 or trials < 1 or jobs < 1:
        raise ConfigParse("n, trials and jobs must be positive")
    if jobs == 1:
        rows = [sweep_trial(n, seed, k) for k in range(trials)]
    else:
        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(sweep_trial, [n] * trials, [seed] * trials, range(trials)))
    rows.sort(key=lambda r: r["trial"])
    gaps = [r["gap"] for r in rows if r["gas"]]
    summary = {
        "n": n,
        "trials": trials,
        "seed": seed,
        "gas_fraction": sum(1 for r in rows if r["gas"]) / trials,
        "min_gap": min(gaps) if gaps else None,
        "median_gap": statistics.median(gaps) if gaps else None,
        "results": rows,
    }
    text = lio.dumps(summary)
    if args.out:
        lio.write_text(args.out, text)
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "synthesize": cmd_synthesize,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "eigensolve": cmd_eigensolve,
    "feedback-demo": cmd_feedback_demo,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lindstab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key = value file supplying defaults for the flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="build (H, L) for a diagonal target")
    s.add_argument("--spectrum", help="comma-separated descending populations")
    s.add_argument("--a", help="diagonal of L")
    s.add_argument("--h", help="diagonal of H")
    s.add_argument("--auto-M", dest="auto_M", action="store_const", const=True, default=None)
    s.add_argument("--out-dir", default=None)

    v = sub.add_parser("verify", help="certify a pair against a target")
    v.add_argument("--pair")
    v.add_argument("--target", help="density matrix file")
    v.add_argument("--spectrum", help="diagonal target instead of --target")
    v.add_argument("--out")

    m = sub.add_parser("simulate", help="integrate the master equation, write a CSV trace")
    m.add_argument("--pair")
    m.add_argument("--target")
    m.add_argument("--spectrum")
    m.add_argument("--rho0", help="initial state file (default: random full-rank state)")
    m.add_argument("--seed")
    m.add_argument("--horizon")
    m.add_argument("--dt")
    m.add_argument("--records")
    m.add_argument("--out")

    p = sub.add_parser("spectrum", help="Liouvillian eigenvalues as CSV")
    p.add_argument("--pair")
    p.add_argument("--out")

    e = sub.add_parser("eigensolve", help="eigensystem of a real tridiagonal matrix")
    e.add_argument("--alpha")
    e.add_argument("--beta")
    e.add_argument("--gamma")
    e.add_argument("--out")

    f = sub.add_parser("feedback-demo", help="feedback stabilization of the bundled 4-level system")
    f.add_argument("--p1")
    f.add_argument("--m1")
    f.add_argument("--m2")
    f.add_argument("--m3")
    f.add_argument("--m-cross", dest="m_cross")
    f.add_argument("--epsilon")
    f.add_argument("--horizon")
    f.add_argument("--records")
    f.add_argument("--out-dir", default=None)

    w = sub.add_parser("sweep", help="Monte-Carlo GAS rate over random targets")
    w.add_argument("--n")
    w.add_argument("--trials")
    w.add_argument("--seed")
    w.add_argument("--jobs")
    w.add_argument("--out")
    return parser


DEFAULTS = {
    "synthesize": {"auto_M": False, "out_dir": "."},
    "simulate": {"seed": 0, "records": 200},
    "feedback-demo": {"p1": 0.75, "m1": 0.3, "m2": -0.3, "m3": 0.5, "m_cross": 1.0, "epsilon": 0.01,
                      "records": 200, "out_dir": "."},
    "sweep": {"n": 4, "trials": 100, "seed": 0, "jobs": 1},
}


def _apply_config(args) -> None:
    cfg = lio.parse_config(lio.read_text(args.config)) if args.config else {}
    known = vars(args)
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("command", "config"):
            raise ConfigParse(f"unknown config key {key!r} for {args.command}")
        if known[dest] is None:
            setattr(args, dest, value)
    for dest, value in DEFAULTS.get(args.command, {}).items():
        if getattr(args, dest) is None:
            setattr(args, dest, value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _apply_config(args)
        return COMMANDS[args.command](args)
    except (LindstabError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
