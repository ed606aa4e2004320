"""Command-line front end: headless import, chain building, relaxation,
script replay, animation export, stats and the live session server.

Every path is a thin shell over the library. Diagnostics are line-JSON on
stdout; failures are one JSON record on stderr and a nonzero exit code.
"""

import argparse
import json
import math
import os
import sys

from . import physics as P
from . import project_io as pio
from . import session as S
from .config import PhysicsConfig, load_config
from .errors import EngineError, InvalidCommand
from .meshes import load_obj
from .pdb import load_pdb_spheres
from .scene import new_document
from .transforms import (
    Vec3,
    compose,
    make_transform,
    quat_from_axis_angle,
    transform_from_matrix,
    translation_of,
)

AXIS_VECTORS = {"x": Vec3(1.0, 0.0, 0.0), "y": Vec3(0.0, 1.0, 0.0), "z": Vec3(0.0, 0.0, 1.0)}


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    sys.stdout.flush()


def _fail(code: str, detail: str) -> None:
    sys.stderr.write(json.dumps({"error": code, "detail": detail}, sort_keys=True) + "\n")
    sys.stderr.flush()


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems the same way engine errors go out."""

    def error(self, message):
        _fail("usage", message)
        raise SystemExit(2)


def _physics_override(args) -> PhysicsConfig | None:
    return load_config(args.config) if args.config else None


def _load_project(path: str, args):
    doc = pio.load_file(path)
    override = _physics_override(args)
    if override is not None:
        doc.physics = override
    return doc


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _mesh_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        return "obj"
    if ext == ".pdb":
        return "pdb"
    raise InvalidCommand(f"cannot infer mesh format from {path!r}; pass --format")


def _register_mesh_file(doc, path: str, args) -> str:
    fmt = _mesh_format(path, getattr(args, "format", None))
    name = getattr(args, "name", "") or os.path.splitext(os.path.basename(path))[0]
    text = _read_text(path)
    if fmt == "pdb":
        mesh, meta = load_pdb_spheres(
            text,
            radius_scale=getattr(args, "radius_scale", 1.0),
            subdiv=getattr(args, "subdiv", 0),
        )
        return doc.register_mesh(mesh, meta=meta, name=name)
    mesh = load_obj(text)
    external = path if getattr(args, "link", False) else None
    return doc.register_mesh(mesh, name=name, external_path=external)


# -- subcommands ---------------------------------------------------------------------


def cmd_import(args) -> int:
    doc = new_document(_physics_override(args))
    ref = _register_mesh_file(doc, args.input, args)
    obj = doc.spawn(ref)
    pio.save_file(doc, args.output)
    _emit({"event": "imported", "path": args.output, "mesh": ref, "object": obj.id})
    return 0


def _step_transform(args):
    """Decode the repeat step from either --matrix or the component flags."""
    if args.matrix is not None:
        if args.axis is not None or args.angle_deg != 0.0 or (
            args.tx, args.ty, args.tz
        ) != (0.0, 0.0, 0.0):
            raise InvalidCommand("--matrix cannot be combined with component flags")
        values = [float(v) for v in args.matrix.replace(",", " ").split()]
        if len(values) not in (12, 16):
            raise InvalidCommand("--matrix needs 12 or 16 row-major values")
        rows = [values[i * 4 : i * 4 + 4] for i in range(len(values) // 4)]
        try:
            return transform_from_matrix(rows[:3] if len(rows) == 4 else rows)
        except ValueError as exc:
            raise InvalidCommand(str(exc)) from None

    translation = translation_of(args.tx, args.ty, args.tz)
    if args.axis is None:
        return translation
    axis = AXIS_VECTORS.get(args.axis.lower())
    if axis is None:
        parts = [float(v) for v in args.axis.replace(",", " ").split()]
        if len(parts) != 3:
            raise InvalidCommand("--axis takes x, y, z or three components")
        axis = Vec3(*parts)
    rotation = quat_from_axis_angle(axis, math.radians(args.angle_deg))
    return make_transform(rotation, translation.translation)


def cmd_chain(args) -> int:
    if args.count < 2:
        raise InvalidCommand("a chain needs at least 2 members")
    t_ab = _step_transform(args)
    doc = new_document(_physics_override(args))
    ref = _register_mesh_file(doc, args.mesh, args)
    base = doc.spawn(ref)
    second = doc.spawn(ref, transform=compose(base.state.transform, t_ab))
    chain = doc.chain_create(base.id, second.id, args.count)
    pio.save_file(doc, args.output)
    _emit(
        {
            "event": "chain",
            "path": args.output,
            "chain": chain.id,
            "members": list(chain.member_ids),
        }
    )
    return 0


def cmd_relax(args) -> int:
    doc = _load_project(args.project, args)
    result = P.relax_springs(doc, max_steps=args.max_steps, tol=args.tol)
    pio.save_file(doc, args.output)
    record = {
        "converged": result.converged,
        "steps_used": result.steps_used,
        "final_residual": result.final_residual,
        "path": args.output,
    }
    if args.report:
        from . import reporting

        record["report"] = reporting.write_relax_report(result, args.report)
    _emit(record)
    return 0


def cmd_replay(args) -> int:
    doc = _load_project(args.project, args)
    script = S.parse_script(_read_text(args.script))
    rows = []

    def on_step(delta):
        row = {"step": delta["step"], **delta["stats"]}
        rows.append(row)
        _emit(row)

    core = S.replay_script(doc, script, extra_steps=args.extra_steps, on_step=on_step)
    pio.save_file(core.doc, args.output)
    record = {"event": "replayed", "steps": core.step_index, "path": args.output}
    if args.report:
        from . import reporting

        record["report"] = reporting.write_stats_report(rows, args.report)
    _emit(record)
    return 0


def cmd_export(args) -> int:
    doc = _load_project(args.project, args)
    t1 = args.t1 if args.t1 is not None else doc.duration
    data = pio.export_animation(doc, args.fps, args.t0, t1)
    output = args.output or os.path.splitext(args.project)[0] + pio.ANIMATION_EXTENSION
    with open(output, "wb") as fh:
        fh.write(data)
    frame_count = json.loads(data.decode("utf-8"))["frame_count"]
    _emit({"event": "exported", "path": output, "frame_count": frame_count})
    return 0


def cmd_stats(args) -> int:
    doc = _load_project(args.project, args)
    if args.mode:
        doc.physics_mode = args.mode
    rows = []
    for step in range(args.steps):
        result = P.step(doc)
        row = {"step": step, **result.stats.to_json()}
        rows.append(row)
        _emit(row)
    if args.report:
        from . import reporting

        report = reporting.write_stats_report(rows, args.report)
        _emit({"event": "report", **report})
    return 0


def cmd_serve(args) -> int:
    doc = _load_project(args.project, args) if args.project else new_document(
        _physics_override(args)
    )
    S.run_session(
        doc=doc,
        host=args.host,
        port=args.port,
        autosave_path=args.autosave,
        on_listening=lambda port: _emit({"event": "listening", "port": port}),
    )
    return 0


# -- argument wiring ---------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="asmb", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", help="INI file with a [physics] section")

    p = sub.add_parser("import", help="build a one-object project from a mesh file")
    p.add_argument("input", help="OBJ or PDB file")
    p.add_argument("-o", "--output", required=True, help="project file to write")
    p.add_argument("--format", choices=("obj", "pdb"), help="override format inference")
    p.add_argument("--name", default="", help="mesh name in the project")
    p.add_argument("--radius-scale", type=float, default=1.0, help="PDB sphere scale")
    p.add_argument("--subdiv", type=int, default=0, help="PDB sphere subdivision level")
    p.add_argument(
        "--link", action="store_true",
        help="reference the mesh file by path instead of embedding it",
    )
    common(p)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("chain", help="replicate a mesh along a repeated transform")
    p.add_argument("--mesh", required=True, help="OBJ or PDB file for the repeated unit")
    p.add_argument("--format", choices=("obj", "pdb"))
    p.add_argument("--name", default="")
    p.add_argument("--radius-scale", type=float, default=1.0)
    p.add_argument("--subdiv", type=int, default=0)
    p.add_argument("--tx", type=float, default=0.0, help="step translation x")
    p.add_argument("--ty", type=float, default=0.0, help="step translation y")
    p.add_argument("--tz", type=float, default=0.0, help="step translation z")
    p.add_argument("--axis", help="rotation axis: x, y, z or three components")
    p.add_argument("--angle-deg", type=float, default=0.0, help="step rotation in degrees")
    p.add_argument("--matrix", help="full step as 12 or 16 row-major matrix values")
    p.add_argument("-n", "--count", type=int, required=True, help="total member count")
    p.add_argument("-o", "--output", required=True)
    common(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("relax", help="settle spring networks and save the result")
    p.add_argument("project")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-steps", type=int, default=5000)
    p.add_argument("--tol", type=float, default=0.01, help="rest-length fraction")
    p.add_argument("--report", help="directory for residuals.csv and residuals.png")
    common(p)
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("replay", help="re-run a recorded session script headlessly")
    p.add_argument("project")
    p.add_argument("script", help="lines of: at <step> <command json>")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--extra-steps", type=int, default=0)
    p.add_argument("--report", help="directory for stats.csv and stats.png")
    common(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("export", help="sample keyframe animation into an interchange file")
    p.add_argument("project")
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--from", type=float, default=0.0, dest="t0", help="start time in seconds")
    p.add_argument("--to", type=float, default=None, dest="t1", help="end time (default: duration)")
    p.add_argument("-o", "--output", help="default: project path with .anim")
    common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="step the scene and print collision statistics")
    p.add_argument("project")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--mode", choices=("off", "pose", "full"), help="override physics mode")
    p.add_argument("--report", help="directory for stats.csv and stats.png")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="serve an interactive session over TCP")
    p.add_argument("project", nargs="?", help="project to serve (default: empty scene)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0, help="0 picks a free port")
    p.add_argument("--autosave", help="project path written periodically and on shutdown")
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        _fail(exc.code, str(exc))
        return 1
    except OSError as exc:
        _fail("io_error", str(exc))
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    raise SystemExit(main())
