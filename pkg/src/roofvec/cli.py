"""Batch command line: ``roofvec {polygonize,evaluate,synth,render}``.

Exit codes: 0 success, 1 some buildings failed (others were written),
2 invalid invocation. Log level comes from ``ROOFVEC_LOG`` (default WARNING).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import platform
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .faces import A_MIN, write_pgm
from .geom import Segment
from .ingest import (
    DEFAULT_CONF_CUTOFF,
    DEFAULT_LABEL_THICKNESS,
    BuildingInput,
    export_faces_geojson,
    export_segments,
    export_training_labels,
    faces_from_geojson,
    parse_obb_detections,
    parse_segments,
)
from .metrics import POLYS_MODES, aggregate, evaluate, reports_to_csv
from .pipeline import run_input
from .polygonize import PolygonizeParams, RoofGraph
from .render import LAYERS, BuildingArtifacts, RenderSpec, render_svg
from .synth import KINDS, CorruptionSpec, RoofTemplate, generate, corrupt, random_template

log = logging.getLogger("roofvec")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str = ""
    input: str | None = None
    output: str | None = None
    reference: str | None = None
    eps: float | None = None
    tau_line: float = 3.0
    l_max: float | None = None
    r_int: float | None = None
    a_min: float = float(A_MIN)
    conf_cutoff: float = DEFAULT_CONF_CUTOFF
    image_size: tuple[int, int] = (1024, 1024)
    grid_size: tuple[int, int] | None = None
    polys_mode: str = "rmse"
    workers: int = 1
    dump_labels: bool = False
    seed: int = 0
    seeds: list[int] = field(default_factory=list)
    kinds: list[str] = field(default_factory=list)
    footprint: list[float] | None = None
    rotate: bool = False
    truncate_px: float = 0.0
    jitter_sigma: float = 0.0
    drop_prob: float = 0.0
    angle_jitter: float = 0.0
    label_thickness: float = DEFAULT_LABEL_THICKNESS
    layers: list[str] = field(default_factory=lambda: ["faces", "graph"])
    palette_seed: int = 0

    def validate(self) -> None:
        for name in ("eps", "l_max", "r_int"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.tau_line <= 0 or self.a_min < 0 or self.label_thickness <= 0:
            raise UsageError("tau_line and label_thickness must be positive, a_min non-negative")
        if not 0 <= self.conf_cutoff <= 1:
            raise UsageError("conf_cutoff must lie in [0, 1]")
        if min(self.image_size) <= 0 or (self.grid_size and min(self.grid_size) <= 0):
            raise UsageError("image and grid sizes must be positive")
        if self.polys_mode not in POLYS_MODES:
            raise UsageError(f"polys_mode must be one of {POLYS_MODES}")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if set(self.kinds) - set(KINDS):
            raise UsageError(f"unknown roof kinds {sorted(set(self.kinds) - set(KINDS))}")
        if set(self.layers) - set(LAYERS):
            raise UsageError(f"unknown layers {sorted(set(self.layers) - set(LAYERS))}")

    def polygonize_params(self) -> PolygonizeParams:
        return PolygonizeParams(eps=self.eps, tau_line=self.tau_line, l_max=self.l_max, r_int=self.r_int)


CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"subcommand"}


def load_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def atomic_write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def write_manifest(out: Path, cfg: RunConfig, buildings: list[dict], extra: dict | None = None) -> None:
    doc = {
        "subcommand": cfg.subcommand,
        "config": asdict(cfg),
        "versions": {
            "roofvec": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "buildings": sorted(buildings, key=lambda b: b["id"]),
    }
    if extra:
        doc.update(extra)
    atomic_write(out / "manifest.json", _json(doc))


def _building_id(path: Path) -> str:
    name = path.name
    for suffix in (".segments.json", ".geojson", ".txt"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
            break
    return name[:-4] if name.endswith(".ref") else name


def _load_building(path: Path, cfg: RunConfig) -> BuildingInput:
    bid = _building_id(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".txt":
        return parse_obb_detections(text, cfg.image_size, bid, cfg.conf_cutoff)
    b = parse_segments(text)
    b.building_id = b.building_id or bid
    return b


def _polygonize_one(path_str: str, cfg: RunConfig) -> dict:
    path = Path(path_str)
    bid = _building_id(path)
    out = Path(cfg.output)
    try:
        b = _load_building(path, cfg)
        res = run_input(b, cfg.polygonize_params(), cfg.a_min)
        outputs = [f"{bid}.geojson", f"{bid}.diagnostics.json"]
        atomic_write(out / outputs[0], export_faces_geojson(res.faces, bid, res.image_size) + "\n")
        atomic_write(out / outputs[1], _json(res.diagnostics_dict()))
        if cfg.dump_labels and res.grid.labels is not None:
            outputs.append(f"{bid}.labels.pgm")
            write_pgm(out / outputs[-1], res.grid.labels)
        return {"id": bid, "source": path.name, "status": "ok", "faces": len(res.faces), "outputs": outputs}
    except Exception as exc:  # one bad building must not stop the batch
        log.error("%s: %s", path.name, exc)
        return {"id": bid, "source": path.name, "status": "error", "error": f"{type(exc).__name__}: {exc}"}


def _map(fn, items, cfg: RunConfig) -> list:
    if cfg.workers == 1 or len(items) < 2:
        return [fn(i, cfg) for i in items]
    with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
        return list(ex.map(fn, items, [cfg] * len(items)))


def cmd_polygonize(cfg: RunConfig) -> int:
    src = Path(cfg.input)
    if not src.is_dir():
        raise UsageError(f"input directory {src} does not exist")
    files = sorted([*src.glob("*.txt"), *src.glob("*.segments.json")])
    if not files:
        print(f"no detection files (*.txt, *.segments.json) in {src}", file=sys.stderr)
        return EXIT_USAGE
    results = _map(_polygonize_one, [str(f) for f in files], cfg)
    write_manifest(Path(cfg.output), cfg, results)
    failed = [r for r in results if r["status"] != "ok"]
    for r in failed:
        print(f"error: {r['source']}: {r['error']}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def _index_geojson(d: Path) -> dict[str, Path]:
    return {_building_id(p): p for p in sorted(d.glob("*.geojson"))}


def _evaluate_one(pair: tuple[str, str, str], cfg: RunConfig) -> dict:
    bid, pred_path, ref_path = pair
    try:
        pred, _, psize = faces_from_geojson(Path(pred_path).read_text(encoding="utf-8"))
        ref, _, rsize = faces_from_geojson(Path(ref_path).read_text(encoding="utf-8"))
        grid = tuple(cfg.grid_size or rsize or psize or cfg.image_size)
        rep = evaluate(pred, ref, grid, bid, cfg.polys_mode)
        atomic_write(Path(cfg.output) / f"{bid}.eval.json", _json(rep.to_dict()))
        return {"id": bid, "status": "ok", "report": rep.to_dict()}
    except Exception as exc:
        log.error("%s: %s", bid, exc)
        return {"id": bid, "status": "error", "error": f"{type(exc).__name__}: {exc}"}


def cmd_evaluate(cfg: RunConfig) -> int:
    from .metrics import EvalReport

    if not cfg.input or not cfg.reference:
        raise UsageError("evaluate needs --pred and --ref directories")
    pred_dir, ref_dir = Path(cfg.input), Path(cfg.reference)
    for d in (pred_dir, ref_dir):
        if not d.is_dir():
            raise UsageError(f"directory {d} does not exist")
    preds, refs = _index_geojson(pred_dir), _index_geojson(ref_dir)
    paired = sorted(set(preds) & set(refs))
    unpaired = sorted(set(preds) ^ set(refs))
    for bid in unpaired:
        side = "reference" if bid in preds else "prediction"
        log.warning("%s: missing %s, skipped", bid, side)
        print(f"warning: {bid}: missing {side}, skipped", file=sys.stderr)
    if not paired:
        print("no prediction/reference pairs to evaluate", file=sys.stderr)
        return EXIT_USAGE
    results = _map(_evaluate_one, [(b, str(preds[b]), str(refs[b])) for b in paired], cfg)
    out = Path(cfg.output)
    reports = [EvalReport.from_dict(r["report"]) for r in results if r["status"] == "ok"]
    if reports:
        atomic_write(out / "summary.json", _json(aggregate(reports).to_dict()))
        atomic_write(out / "reports.csv", reports_to_csv(reports))
    manifest = [{k: v for k, v in r.items() if k != "report"} for r in results]
    write_manifest(out, cfg, manifest, {"unpaired": unpaired})
    return EXIT_PARTIAL if len(reports) < len(results) else EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    kinds = cfg.kinds or list(KINDS)
    seeds = cfg.seeds or [cfg.seed]
    size = cfg.image_size
    buildings = []
    for kind in kinds:
        for seed in seeds:
            try:
                if cfg.footprint:
                    fp = cfg.footprint
                    if len(fp) % 4:
                        raise UsageError("--footprint takes groups of four numbers: x y w h")
                    rects = tuple(tuple(fp[i : i + 4]) for i in range(0, len(fp), 4))
                    template = RoofTemplate(kind, rects, seed)
                else:
                    template = random_template(kind, seed, max(size), cfg.rotate)
                truth, edges = generate(template)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            spec = CorruptionSpec(cfg.truncate_px, cfg.jitter_sigma, cfg.drop_prob, cfg.angle_jitter, seed)
            noisy = corrupt(edges, spec)
            bid = f"{kind}_{seed:04d}"
            b = BuildingInput(bid, size, noisy)
            atomic_write(out / f"{bid}.segments.json", export_segments(b) + "\n")
            atomic_write(out / f"{bid}.ref.geojson", export_faces_geojson(truth, bid, size) + "\n")
            labels = export_training_labels(truth, size, cfg.label_thickness)
            atomic_write(out / "labels" / f"{bid}.txt", "\n".join(labels) + "\n")
            buildings.append({"id": bid, "status": "ok", "faces": len(truth), "edges": len(edges), "detections": len(noisy)})
    write_manifest(out, cfg, buildings)
    return EXIT_OK


def _graph_from_diagnostics(d: dict) -> tuple[RoofGraph | None, list[Segment]]:
    g = d.get("graph")
    graph = None
    if g and g.get("edges"):
        graph = RoofGraph(np.array(g["vertices"], dtype=float).reshape(-1, 2), [tuple(e) for e in g["edges"]])
    segs = [Segment.from_coords(int(i), x0, y0, x1, y1) for i, x0, y0, x1, y1 in d.get("input_segments", [])]
    return graph, segs


def cmd_render(cfg: RunConfig) -> int:
    src = Path(cfg.input)
    if not src.is_dir():
        raise UsageError(f"input directory {src} does not exist")
    faces_files = {bid: p for bid, p in _index_geojson(src).items()}
    if not faces_files:
        print(f"no faces GeoJSON in {src}", file=sys.stderr)
        return EXIT_USAGE
    refs = _index_geojson(Path(cfg.reference)) if cfg.reference else {}
    out = Path(cfg.output)
    results = []
    for bid, path in sorted(faces_files.items()):
        try:
            faces, _, size = faces_from_geojson(path.read_text(encoding="utf-8"))
            size = tuple(size or cfg.image_size)
            art = BuildingArtifacts(faces=faces, title=bid)
            diag_path = src / f"{bid}.diagnostics.json"
            if diag_path.exists():
                art.graph, art.edges = _graph_from_diagnostics(json.loads(diag_path.read_text(encoding="utf-8")))
            if bid in refs:
                art.reference = faces_from_geojson(refs[bid].read_text(encoding="utf-8"))[0]
            layers = tuple(cfg.layers)
            svg = render_svg(art, RenderSpec(size[0], size[1], layers, cfg.palette_seed))
            atomic_write(out / f"{bid}.svg", svg)
            results.append({"id": bid, "status": "ok", "outputs": [f"{bid}.svg"]})
        except Exception as exc:
            log.error("%s: %s", bid, exc)
            results.append({"id": bid, "status": "error", "error": f"{type(exc).__name__}: {exc}"})
    write_manifest(out, cfg, results)
    return EXIT_PARTIAL if any(r["status"] != "ok" for r in results) else EXIT_OK


COMMANDS = {"polygonize": cmd_polygonize, "evaluate": cmd_evaluate, "synth": cmd_synth, "render": cmd_render}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roofvec", description="Roof-edge polygonization and evaluation.")
    p.add_argument("--version", action="version", version=f"roofvec {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    S = argparse.SUPPRESS

    def common(sp):
        sp.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
        sp.add_argument("-o", "--output", default=S, help="output directory")
        sp.add_argument("--workers", type=int, default=S, help="parallel worker processes (default 1)")
        sp.add_argument("--image-size", dest="image_size", type=int, nargs=2, metavar=("W", "H"), default=S,
                        help="image size in px (default 1024 1024)")

    sp = sub.add_parser("polygonize", help="detections -> faces GeoJSON per building")
    common(sp)
    sp.add_argument("input", nargs="?", default=S, help="directory with *.txt (YOLO-OBB) or *.segments.json files")
    sp.add_argument("--eps", type=float, default=S, help="endpoint clustering radius in px (default 12 at 1024 px, scaled)")
    sp.add_argument("--tau-line", dest="tau_line", type=float, default=S, help="max distance of a suggestion from the gap edge's line (default 3)")
    sp.add_argument("--l-max", dest="l_max", type=float, default=S, help="max gap extension in px (default 0.25 * image diagonal)")
    sp.add_argument("--r-int", dest="r_int", type=float, default=S, help="pair-intersection radius around a junction (default 3 * eps)")
    sp.add_argument("--a-min", dest="a_min", type=float, default=S, help="minimum face area in px^2 (default 16)")
    sp.add_argument("--conf", dest="conf_cutoff", type=float, default=S, help="detection confidence cutoff (default 0.25)")
    sp.add_argument("--dump-labels", dest="dump_labels", action="store_true", default=S, help="also write the label grid as PGM")

    sp = sub.add_parser("evaluate", help="metrics of predicted vs reference faces")
    common(sp)
    sp.add_argument("--pred", dest="input", default=S, help="directory of predicted <id>.geojson")
    sp.add_argument("--ref", dest="reference", default=S, help="directory of reference <id>[.ref].geojson")
    sp.add_argument("--grid", dest="grid_size", type=int, nargs=2, metavar=("W", "H"), default=S,
                    help="raster grid for IoU (default: the reference's image size)")
    sp.add_argument("--polys-mode", dest="polys_mode", choices=POLYS_MODES, default=S, help="PolyS aggregation (default rmse)")

    sp = sub.add_parser("synth", help="write synthetic roofs with corrupted detections")
    common(sp)
    sp.add_argument("--kind", dest="kinds", action="append", choices=KINDS, default=S, help="roof kind (repeatable; default all)")
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--seeds", type=int, nargs="+", default=S)
    sp.add_argument("--footprint", type=float, nargs="+", default=S, metavar="N",
                    help="x y w h [x y w h] rectangles instead of a random footprint")
    sp.add_argument("--rotate", action="store_true", default=S)
    sp.add_argument("--truncate", dest="truncate_px", type=float, default=S)
    sp.add_argument("--jitter", dest="jitter_sigma", type=float, default=S)
    sp.add_argument("--drop", dest="drop_prob", type=float, default=S)
    sp.add_argument("--angle-jitter", dest="angle_jitter", type=float, default=S)
    sp.add_argument("--label-thickness", dest="label_thickness", type=float, default=S,
                    help="box thickness for the exported OBB training labels (default 6)")

    sp = sub.add_parser("render", help="SVG overlays of polygonize output")
    common(sp)
    sp.add_argument("input", nargs="?", default=S, help="polygonize output directory")
    sp.add_argument("--ref", dest="reference", default=S, help="reference GeoJSON directory to overlay")
    sp.add_argument("--layers", nargs="+", choices=LAYERS, default=S)
    sp.add_argument("--palette-seed", dest="palette_seed", type=int, default=S)
    return p


def make_config(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(ns, "config", None):
        values.update(load_config_file(ns.config))
    values.update({k: v for k, v in vars(ns).items() if k in CONFIG_KEYS})
    for k in ("image_size", "grid_size"):
        if values.get(k) is not None:
            values[k] = tuple(values[k])
    cfg = RunConfig(subcommand=ns.subcommand, **values)
    if not cfg.input and cfg.subcommand != "synth":
        raise UsageError(f"{cfg.subcommand} needs an input directory")
    if not cfg.output:
        raise UsageError("--output is required")
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("ROOFVEC_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = make_config(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"roofvec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
