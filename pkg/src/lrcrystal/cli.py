"""Command-line front end.

Exit codes: 0 success, 2 invalid extent, 3 unconverged couplings (unless
``--allow-unconverged``), 4 any other error while computing.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import __version__, couplings, models, optimizer, phases, report, zcell
from .energy import HARDCORE, ModelParams
from .geometry import UnknownLattice, embed, get_lattice

log = logging.getLogger("lrcrystal")

EXIT_OK, EXIT_BAD_EXTENT, EXIT_UNCONVERGED, EXIT_ERROR = 0, 2, 3, 4

MODELS = ("custom", "ebhm", "fss", "aflrim")


class ConfigError(ValueError):
    pass


class BadExtent(ConfigError):
    pass


class UnconvergedCouplings(RuntimeError):
    pass


@dataclass
class RunConfig:
    lattice: str = "triangular"
    model: str = "custom"
    alpha: float = 6.0
    extent: str = "B3"
    axis: str = "delta/V"
    grid: tuple = (-0.05, 4.35, 0.01)
    filling: str | None = None
    mu: float = 0.0
    U: float | str = HARDCORE
    V: float = 1.0
    x: float | None = None
    resum_k: tuple = ()
    resum_tol: float = 1e-10
    fit_points: int = 3
    restarts: int = 10
    exhaustive_limit: int = 2_000_000
    seed: int = 0
    jobs: int = 1
    mode: str = "envelope"
    out: str = "lrcrystal-out"
    allow_unconverged: bool = False
    cells: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        d["resum_k"] = list(self.resum_k)
        return d

    # validated views ------------------------------------------------------

    def extent_spec(self) -> tuple[str, int]:
        return parse_extent(self.extent)

    def resum(self) -> couplings.ResumParams:
        return couplings.ResumParams(self.alpha, tuple(self.resum_k), self.fit_points,
                                     self.resum_tol)

    def budget(self) -> optimizer.SearchBudget:
        return optimizer.SearchBudget(exhaustive_limit=self.exhaustive_limit,
                                      restarts_without_improvement=self.restarts,
                                      rng_seed=self.seed)

    def fill(self) -> Fraction | None:
        return None if self.filling in (None, "", "none") else Fraction(self.filling)

    def validate(self) -> None:
        self.extent_spec()
        try:
            get_lattice(self.lattice)
        except UnknownLattice:
            raise ConfigError(f"unknown lattice {self.lattice!r}") from None
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        couplings.check_alpha(self.alpha)
        self.resum()
        self.budget()
        if self.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        if len(self.grid) != 3 or not self.grid[2] > 0 or self.grid[1] < self.grid[0]:
            raise ConfigError(f"bad grid {self.grid}")
        if self.U != HARDCORE and float(self.U) < 0:
            raise ConfigError("U must be >= 0 or 'hardcore'")


def parse_extent(text: str) -> tuple[str, int]:
    text = str(text).strip()
    name = "B"
    if text[:1].isalpha():
        name, text = text[0].upper(), text[1:]
    if name not in ("A", "B"):
        raise BadExtent(f"extent family must be A or B, got {name!r}")
    try:
        m = int(text)
    except ValueError:
        raise BadExtent(f"invalid extent {text!r}") from None
    if m < 0:
        raise BadExtent(f"extent m must be >= 0, got {m}")
    return name, m


def parse_grid(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.replace(",", ":").split(":")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid is start:stop:step")
    return tuple(parts)


def parse_k(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def parse_u(text: str):
    return HARDCORE if text.lower() in ("hardcore", "inf") else float(text)


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    explicit = set()
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        names = {f.name for f in fields(RunConfig)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, tuple(v) if isinstance(v, list) else v)
        explicit |= set(data)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
            explicit.add(f.name)
    apply_preset(cfg, explicit)
    return cfg


def apply_preset(cfg: RunConfig, explicit: set) -> None:
    """Fill model-specific defaults for fields the user left alone."""
    def default(name, value):
        if name not in explicit:
            setattr(cfg, name, value)

    if cfg.model == "ebhm":
        default("lattice", "triangular")
        default("alpha", 3.0)
        default("axis", "V/U")
        default("filling", "1/2")
        default("U", 1.0)
        default("extent", "B4")
        default("grid", (0.05, 4.5, 0.05))
    elif cfg.model == "fss":
        default("lattice", "kagome_site" if cfg.lattice == "triangular" else cfg.lattice)
        default("alpha", 6.0)
        default("axis", "delta/V")
        default("filling", None)
        default("U", HARDCORE)
        default("extent", "A4" if cfg.lattice == "kagome_link" else "B6")
    elif cfg.model == "aflrim":
        default("lattice", "triangular")
        default("U", HARDCORE)
        default("extent", "B4")


def _setup(cfg: RunConfig) -> tuple:
    lattice = get_lattice(cfg.lattice)
    name, m = cfg.extent_spec()
    if cfg.cells:
        with open(cfg.cells) as fh:
            cells = zcell.load_cells(fh)
    else:
        if m == 0:
            log.warning("extent m=0 admits no cells")
        cells = zcell.enumerate_cells(zcell.extent_set(name, m))
    return lattice, cells


def _matrices(cfg: RunConfig, lattice, cells, out: Path) -> list:
    cache = couplings.CouplingCache(out / "cache")
    mats = couplings.matrices_for(lattice, cells, cfg.resum(), cache, cfg.jobs)
    bad = [cm.cell.key for cm in mats if not cm.converged]
    if bad and not cfg.allow_unconverged:
        raise UnconvergedCouplings(f"{len(bad)} unconverged coupling matrices, e.g. {bad[:3]}")
    return mats


# -- subcommands -----------------------------------------------------------------

def cmd_enumerate(cfg: RunConfig) -> int:
    lattice, cells = _setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "cells.jsonl"
    with path.open("w") as fh:
        zcell.dump_cells(cells, fh, header=report.header(cfg.to_dict()))
    counts: dict[int, int] = {}
    for c in cells:
        counts[c.index] = counts.get(c.index, 0) + 1
    print(f"{len(cells)} cells ({cfg.extent}, lattice {lattice.name}) -> {path}")
    for n in sorted(counts):
        print(f"  index {n:3d}: {counts[n]:4d} classes, {n * lattice.m} sites")
    return EXIT_OK


def cmd_resum(cfg: RunConfig) -> int:
    lattice, cells = _setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cache = couplings.CouplingCache(out / "cache")
    mats = couplings.matrices_for(lattice, cells, cfg.resum(), cache, cfg.jobs)
    mub = couplings.self_coupling_sum(lattice, cfg.resum())
    worst = max((cm.max_residual for cm in mats), default=0.0)
    bad = [cm.cell.key for cm in mats if not cm.converged]
    print(f"{len(mats)} matrices, {cache.hits} cached, {cache.misses} computed")
    print(f"mu_bar(alpha={cfg.alpha:g}) = {mub:.10f}")
    print(f"max fit residual = {worst:.3e}")
    report.write_jsonl(out / "resum_summary.jsonl",
                       [{"mu_bar": mub, "max_residual": worst, "unconverged": bad,
                         "cache": str(cache.path(lattice, cfg.resum()))}], cfg.to_dict())
    if bad and not cfg.allow_unconverged:
        print(f"{len(bad)} matrices did not converge", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_OK


def point_params(cfg: RunConfig) -> ModelParams:
    if cfg.model == "aflrim":
        return models.aflrim_map(cfg.V / 4.0, cfg.alpha, cfg.resum())
    if cfg.x is not None:
        spec = sweep_spec(cfg)
        return spec.params_at(cfg.x)
    return ModelParams(mu=cfg.mu, U=cfg.U, V=cfg.V, alpha=cfg.alpha)


def cmd_ground_state(cfg: RunConfig) -> int:
    lattice, cells = _setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mats = _matrices(cfg, lattice, cells, out)
    params = point_params(cfg)
    filling = cfg.fill()
    cm, res, _ = optimizer.best_over_cells(mats, params, cfg.budget(), filling, None, cfg.jobs)
    lab = phases.label(cm.cell, res.best)
    rec = {"cell": cm.cell.key, "occ": [int(v) for v in res.best], "eps": res.energy,
           "f": str(res.filling), "exact": res.exact, "degeneracy": res.degeneracy,
           "converged": res.converged, "phase": lab.to_dict(),
           "params": {"mu": params.mu, "U": params.U, "V": params.V, "alpha": params.alpha},
           "breakdown": asdict(res.eps)}
    report.write_jsonl(out / "ground_state.jsonl", [rec], cfg.to_dict())
    (out / "ground_state.svg").write_text(report.pattern_svg(
        cm.cell.sites, cm.cell.T1, cm.cell.T2, res.best, title=lab.name, config=cfg.to_dict()))
    print(f"best cell {cm.cell.key} (p={cm.p}): eps = {res.energy:.12f}, {lab.name}")
    return EXIT_OK


def sweep_spec(cfg: RunConfig) -> models.SweepSpec:
    return models.SweepSpec(cfg.lattice, cfg.alpha, cfg.axis, tuple(cfg.grid), cfg.extent_spec(),
                            cfg.fill(), cfg.U if cfg.axis == "delta/V" else HARDCORE,
                            True, cfg.mode)


def cmd_sweep(cfg: RunConfig) -> int:
    spec = sweep_spec(cfg)
    lattice, cells = _setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if spec.filling is not None:
        cells = [c for c in cells if (spec.filling * c.index * lattice.m).denominator == 1]
    mats = _matrices(cfg, lattice, cells, out)
    ckpt = out / "searches.jsonl"
    memo = {}
    if ckpt.exists():
        head, recs = report.read_jsonl(ckpt)
        if head is not None and head.get("config") == cfg.to_dict():
            memo = {repr(float(r["x"])): r for r in recs}
            print(f"resuming: {len(memo)} stored searches")
        else:
            ckpt.unlink()
    diagram = models.sweep(spec, cfg.budget(), mats=mats, jobs=cfg.jobs, memo=memo,
                           on_search=lambda r: report.append_jsonl(ckpt, r, cfg.to_dict()),
                           progress=lambda msg: log.info(msg))
    write_diagram(diagram, out, cfg.to_dict(), {cm.cell.key: cm.cell for cm in mats})
    print(f"{len(diagram.points)} grid points, phases in order:")
    for lab in diagram.phase_sequence():
        print(f"  {lab.name}")
    print("boundaries:")
    for b in diagram.boundaries:
        print(f"  {spec.axis} = {b.x:.6f}: {b.left.name} -> {b.right.name}")
    if diagram.unconverged:
        print(f"warning: {diagram.unconverged} searches hit the restart cap", file=sys.stderr)
    return EXIT_OK


def write_diagram(diagram: models.PhaseDiagram, out: Path, config: dict, cells: dict) -> None:
    pts = [p.to_dict() for p in diagram.points]
    report.write_diagram_csv(out / "diagram.csv", pts, config)
    report.write_jsonl(out / "diagram.jsonl", pts, config)
    bounds = [{"x_lo": b.x_lo, "x_hi": b.x_hi, "left": b.left.to_dict(), "right": b.right.to_dict()}
              for b in diagram.boundaries]
    report.write_jsonl(out / "boundaries.jsonl", bounds, config)
    render(out, config, pts, diagram.spec.axis, cells)


def render(out: Path, config: dict, pts: list[dict], axis: str, cells: dict | None = None) -> None:
    out = Path(out)
    (out / "diagram.svg").write_text(report.diagram_svg(pts, axis, config))
    pat_dir = out / "patterns"
    pat_dir.mkdir(exist_ok=True)
    lattice = get_lattice(config["lattice"])
    seen = set()
    for p in pts:
        if p["phase"] in seen:
            continue
        seen.add(p["phase"])
        cell = (cells or {}).get(p["cell"]) or embed(lattice, zcell.cell_from_key(p["cell"]))
        (pat_dir / f"{p['phase']}.svg").write_text(report.pattern_svg(
            cell.sites, cell.T1, cell.T2, p["occ"], title=f"{p['phase_name']}  x={p['x']:g}",
            config=config))


def cmd_plot(args) -> int:
    src = Path(args.input)
    path = src / "diagram.jsonl" if src.is_dir() else src
    head, pts = report.read_jsonl(path)
    if head is None:
        raise ConfigError(f"{path} has no header")
    config = head["config"]
    out = Path(args.out or path.parent)
    out.mkdir(parents=True, exist_ok=True)
    render(out, config, pts, config.get("axis", "x"))
    print(f"rendered {len({p['phase'] for p in pts})} patterns to {out}")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its values")
    p.add_argument("--lattice", help="triangular, kagome_site, kagome_link or a lattice JSON file")
    p.add_argument("--extent", help="extent set, e.g. B4 or A4 (default family B)")
    p.add_argument("--cells", help="cell dump to use instead of --extent")
    p.add_argument("--alpha", type=float)
    p.add_argument("--resum-k", dest="resum_k", type=parse_k, help="comma-separated K schedule")
    p.add_argument("--resum-tol", dest="resum_tol", type=float)
    p.add_argument("--fit-points", dest="fit_points", type=int)
    p.add_argument("--allow-unconverged", dest="allow_unconverged", action="store_true",
                   default=None)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")


def _search(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--filling", help="fixed filling such as 1/2; omit for grand canonical")
    p.add_argument("--mu", type=float)
    p.add_argument("--U", type=parse_u, help="on-site repulsion or 'hardcore'")
    p.add_argument("--V", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--exhaustive-limit", dest="exhaustive_limit", type=int)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrcrystal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate-cells", help="write the unit-cell set of an extent")
    _common(p)
    p = sub.add_parser("resum", help="compute or extend the coupling cache")
    _common(p)
    p = sub.add_parser("ground-state", help="best configuration at one parameter point")
    _common(p)
    _search(p)
    p.add_argument("--axis", choices=models.AXES)
    p.add_argument("--x", type=float, help="value of the sweep axis (overrides --mu/--V)")
    p = sub.add_parser("sweep", help="phase diagram along one axis")
    _common(p)
    _search(p)
    p.add_argument("--axis", choices=models.AXES)
    p.add_argument("--grid", type=parse_grid, help="start:stop:step")
    p.add_argument("--mode", choices=("envelope", "grid"))
    p = sub.add_parser("plot", help="re-render SVG files from diagram.jsonl")
    p.add_argument("input", help="output directory or diagram.jsonl")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


COMMANDS = {"enumerate-cells": cmd_enumerate, "resum": cmd_resum,
            "ground-state": cmd_ground_state, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            return cmd_plot(args)
        cfg = build_config(args)
        try:
            cfg.validate()
        except BadExtent as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_EXTENT
        except (ConfigError, couplings.InvalidParameters, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_ERROR
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", couplings.Unconverged)
            return COMMANDS[args.command](cfg)
    except UnconvergedCouplings as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except BadExtent as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_EXTENT
    except Exception as exc:  # noqa: BLE001 - every module error maps to one exit code
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
