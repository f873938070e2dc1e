"""Command-line driver: ``ilwlab COMMAND CONFIG OUTDIR``.

Configs are flat ``key = value`` files; ``#`` starts a comment.  Exit codes:
0 success, 1 numerical guard or failed check, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

log = logging.getLogger("ilwlab")

COMMANDS = ("simulate", "kernel", "symbols", "identities", "decay", "vectorfield")


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(p) for p in s.split(",") if p.strip())


def _str(s: str) -> str:
    return s.strip()


# key -> (parser, default)
KEYS = {
    # grid and flow
    "L": (float, 512.0),
    "n": (int, 2048),
    "x_min": (float, None),
    "delta": (float, 1.0),
    "model": (_str, "ilw-transport"),
    "dt": (float, 0.01),
    "t_end": (float, 5.0),
    "cadence": (int, 100),
    "dealias": (_bool, True),
    # datum
    "datum": (_str, "gaussian"),
    "amplitude": (float, 0.1),
    "width": (float, 3.0),
    "center": (float, 0.0),
    "shell": (int, -3),
    "sep": (float, 20.0),
    "datum_path": (_str, None),
    # vector field and decay
    "frame": (_str, "transport"),
    "x0": (float, 0.0),
    "kappa": (float, 0.05),
    "eps": (float, 0.1),
    "threshold": (float, 1e-10),
    "stride": (int, 1),
    "decay": (_bool, False),
    "d_sign": (float, 1.0),
    "b2_sign": (float, 1.0),
    # kernel
    "times": (_floats, (1.0, 10.0, 100.0)),
    "j_min": (int, -6),
    "j_max": (int, 0),
    "x_points": (int, 2001),
    "oversample": (float, 1.0),
    # symbol lattices
    "lattice_n": (int, 400),
    "bound": (float, 25.0),
    "tol": (float, 1e-10),
    "tol_band": (float, 1e-6),
    "ladder": (_bool, True),
    "ladder_n3": (int, 40),
    "ladder_bound3": (float, 15.0),
    "symbols": (_str, "b,ctilde_a,d,c_sym3,b_residual"),
    # output
    "plots": (_bool, False),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    values: dict
    digest: str

    def __getitem__(self, k):
        return self.values[k]


def parse_config(text: str, source: str = "<config>") -> Config:
    """Parse ``key = value`` lines; unknown keys and malformed lines raise ``ConfigError``."""
    vals = {}
    seen = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{ln}: expected 'key = value', got {raw.strip()!r}")
        k, v = (p.strip() for p in line.split("=", 1))
        if k not in KEYS:
            raise ConfigError(f"{source}:{ln}: unknown key {k!r}")
        if k in seen:
            raise ConfigError(f"{source}:{ln}: duplicate key {k!r} (first set on line {seen[k]})")
        try:
            vals[k] = KEYS[k][0](v)
        except ValueError as e:
            raise ConfigError(f"{source}:{ln}: bad value for {k!r}: {e}") from None
        seen[k] = ln
    full = {k: vals.get(k, d) for k, (_, d) in KEYS.items()}
    if full["x_min"] is None:
        full["x_min"] = -full["L"] / 2.0
    canon = "\n".join(f"{k}={full[k]!r}" for k in sorted(full))
    return Config(full, hashlib.sha256(canon.encode()).hexdigest()[:16])


def load_config(path: str) -> Config:
    with open(path) as fh:
        return parse_config(fh.read(), path)


# ---------------------------------------------------------------------------
# builders


def _grid(cfg):
    from .grid import GridSpec

    return GridSpec(cfg["L"], cfg["n"], cfg["x_min"])


def _datum(cfg):
    from .solver import Datum

    return Datum(cfg["datum"], cfg["amplitude"], cfg["width"], cfg["center"], cfg["shell"], cfg["sep"], cfg["datum_path"])


def _sim_config(cfg):
    from .solver import SimConfig

    return SimConfig(
        _grid(cfg), cfg["delta"], cfg["model"], cfg["dt"], cfg["t_end"], _datum(cfg), cfg["dealias"], cfg["cadence"]
    )


def _nf(cfg):
    from .normal_form import NormalForm

    return NormalForm(cfg["delta"], "ilw", cfg["b2_sign"], cfg["d_sign"])


def _cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class _Out:
    def __init__(self, outdir, command, cfg):
        self.dir = outdir
        self.tag = f"ilwlab {command} config={cfg.digest}"
        os.makedirs(outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.dir, name)

    def table(self, name, header, rows):
        with open(self.path(name), "w") as fh:
            fh.write(f"# {self.tag}\n")
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(_cell(v) for v in r) + "\n")


def _plot(out, name, x, ys, xlabel, logy=False):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not available; skipping %s", name)
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in ys.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    if logy:
        ax.set_yscale("log")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out.path(name), dpi=110, metadata={"Software": None})
    plt.close(fig)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg, out):
    from . import solver, vectorfield

    trace = solver.evolve(_sim_config(cfg))
    trace.to_csv(out.path("trace.csv"), out.tag)
    final = trace.fields[-1]
    out.table("final_field.csv", ["x", "value"], zip(final.grid.x, final.values.real))
    if cfg["plots"]:
        _plot(out, "trace.png", trace.times, {k: trace.diagnostics[k] for k in ("E0", "E1", "E2")}, "t")
    if cfg["decay"]:
        rep = vectorfield.track_decay(trace, cfg["eps"], _nf(cfg), cfg["frame"], cfg["x0"], cfg["kappa"], threshold=cfg["threshold"])
        rep.to_csv(out.path("decay.csv"), out.tag)
    return 0


def cmd_decay(cfg, out):
    from . import solver, vectorfield

    trace = solver.evolve(_sim_config(cfg))
    trace.to_csv(out.path("trace.csv"), out.tag)
    rep = vectorfield.track_decay(trace, cfg["eps"], _nf(cfg), cfg["frame"], cfg["x0"], cfg["kappa"], threshold=cfg["threshold"])
    rep.to_csv(out.path("decay.csv"), out.tag)
    if cfg["plots"]:
        _plot(out, "decay.png", rep.times, {k: v for k, v in rep.columns.items() if k != "besov_rate"}, "t")
    return 0


def cmd_vectorfield(cfg, out):
    from . import solver, vectorfield

    trace = solver.evolve(_sim_config(cfg))
    res = vectorfield.v_equation_residual(trace, _nf(cfg), cfg["frame"], cfg["x0"], cfg["stride"], cfg["threshold"])
    out.table("v_residual.csv", ["t", "residual", "v_norm", "relative"], zip(res.times, res.residual, res.v_norm, res.relative))
    if cfg["plots"]:
        _plot(out, "v_residual.png", res.times, {"relative": res.relative}, "t", logy=True)
    print(f"max relative residual {res.relative.max():.3e}")
    return 0


def cmd_kernel(cfg, out):
    from . import linear_dispersion as LD

    rows, summary = [], []
    for t in cfg["times"]:
        for j in range(cfg["j_min"], cfg["j_max"] + 1):
            x = LD.shell_probe_x(t, j, cfg["x_points"], cfg["delta"])
            s = LD.kernel(t, ("shell", j), x, cfg["delta"], cfg["frame"], cfg["oversample"])
            for xv, kv in zip(x, s.K):
                rows.append((t, j, xv, kv.real, kv.imag))
            ratio = float(np.abs(s.K).max() * 2.0 ** (j / 2.0) * np.sqrt(t + 2.0 ** (-3 * j)))
            summary.append((t, j, ratio, float(x[np.argmax(np.abs(s.K))])))
    out.table("kernel.csv", ["t", "j", "x", "re", "im"], rows)
    out.table("kernel_bounds.csv", ["t", "j", "bound_ratio", "peak_x"], summary)
    if cfg["plots"]:
        for t in cfg["times"]:
            sel = [r for r in summary if r[0] == t]
            _plot(out, f"kernel_bounds_t{t:g}.png", [r[1] for r in sel], {"ratio": [r[2] for r in sel]}, "j")
    return 0


def cmd_symbols(cfg, out):
    from .normal_form import SymbolGrid

    g = SymbolGrid(cfg["lattice_n"], cfg["bound"], cfg["delta"])
    for name in (p.strip() for p in cfg["symbols"].split(",") if p.strip()):
        try:
            g.value(name)
        except KeyError:
            raise ConfigError(f"unknown symbol {name!r}") from None
        g.to_csv(name, out.path(f"symbol_{name}.csv"), out.tag)
    return 0


def cmd_identities(cfg, out):
    from .normal_form import SymbolGrid, decay_ladder, verify_quadratic_identity

    g = SymbolGrid(cfg["lattice_n"], cfg["bound"], cfg["delta"])
    rep = verify_quadratic_identity(g, nf=_nf(cfg), tol=cfg["tol"], tol_band=cfg["tol_band"])
    print(rep.text())
    out.table(
        "identities.csv",
        ["check", "max_err", "max_err_band", "tol", "tol_band", "passed"],
        [(c.name, c.max_err, c.max_err_band, c.tol, c.tol_band, str(c.passed)) for c in rep.checks],
    )
    ok = rep.passed
    if cfg["ladder"]:
        rows = []
        for n in (cfg["lattice_n"], 2 * cfg["lattice_n"]):
            lad = decay_ladder(n, cfg["bound"], cfg["ladder_n3"] * (n // cfg["lattice_n"]), cfg["ladder_bound3"], cfg["delta"])
            rows.append((n, lad))
        names = list(rows[0][1])
        table = []
        for name in names:
            a, b = rows[0][1][name], rows[1][1][name]
            stable = bool(np.isfinite(a) and np.isfinite(b) and max(a, b) <= 2.0 * min(a, b))
            ok &= stable
            print(f"{'PASS' if stable else 'FAIL'} ladder {name}: {a:.6g} -> {b:.6g} under refinement x2")
            table.append((name, a, b, str(stable)))
        out.table("decay_ladder.csv", ["symbol", "sup_n", "sup_2n", "stable"], table)
    return 0 if ok else 1


HANDLERS = {
    "simulate": cmd_simulate,
    "kernel": cmd_kernel,
    "symbols": cmd_symbols,
    "identities": cmd_identities,
    "decay": cmd_decay,
    "vectorfield": cmd_vectorfield,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ilwlab", description="Numerical laboratory for the ILW equation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        s = sub.add_parser(c, help=(HANDLERS[c].__doc__ or c))
        s.add_argument("config", help="flat key = value config file")
        s.add_argument("outdir", help="output directory")
    return p


def main(argv=None) -> int:
    from .solver import NumericalGuardError

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        out = _Out(args.outdir, args.command, cfg)
        return HANDLERS[args.command](cfg, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalGuardError as e:
        print(f"numerical guard: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
