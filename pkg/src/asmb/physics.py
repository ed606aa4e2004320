"""Pose-mode rigid body dynamics.

The central design choice: the only objects that ever move are the ones a
user is directly manipulating (mode "pose"), so collision response forces are
applied to manipulated objects only and everything else stays bit-identical.
Mode "full" integrates every body; mode "off" moves grabbed bodies without
any collision checks.

Trackers couple to objects through a spring-damper wrench rather than a hard
kinematic bind, so a grabbed object pressed against an obstacle lags behind
the hand instead of tunneling: it can slide along surfaces but not through
them. Integration is semi-implicit Euler at a fixed timestep with a fixed
accumulation order (object id, then connector id, then contact pair), which
makes every trajectory bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

from . import collision as collision_mod
from .config import PhysicsConfig
from .errors import DanglingEndpoint, NoTerminusData, NonFiniteState, UnknownId
from .meshes import LocalBox, box_center
from .transforms import (
    RigidTransform,
    Vec3,
    apply_transform,
    compose,
    inverse,
    quat_axis_angle,
    quat_canonical,
    quat_multiply,
    quat_rotate,
    quat_conjugate,
    relative_transform,
    transform_power,
    vadd,
    vcross,
    vfinite,
    vnorm,
    vscale,
    vsub,
)

if TYPE_CHECKING:
    from .collision import CollisionStats, ContactReport
    from .scene import SceneDoc

ZERO = Vec3(0.0, 0.0, 0.0)


@dataclass
class BodyState:
    """Dynamic state of one scene object. Mass is 1 by convention; inertia is
    the solid-cuboid diagonal of the local bounding box, kept in body frame."""

    transform: RigidTransform
    linear_velocity: Vec3 = ZERO
    angular_velocity: Vec3 = ZERO
    mass: float = 1.0
    inertia: Vec3 = Vec3(1.0, 1.0, 1.0)
    center_local: Vec3 = ZERO

    def world_com(self) -> Vec3:
        return apply_transform(self.transform, self.center_local)


def cuboid_inertia(box: LocalBox, mass: float = 1.0) -> Vec3:
    """Solid cuboid diagonal inertia; flat extents are floored so flat or
    degenerate meshes stay integrable."""
    ex = box.max.x - box.min.x
    ey = box.max.y - box.min.y
    ez = box.max.z - box.min.z
    c = mass / 12.0
    floor = 1e-9
    return Vec3(
        max(c * (ey * ey + ez * ez), floor),
        max(c * (ex * ex + ez * ez), floor),
        max(c * (ex * ex + ey * ey), floor),
    )


def body_for_box(transform: RigidTransform, box: LocalBox, mass: float = 1.0) -> BodyState:
    return BodyState(
        transform=transform,
        mass=mass,
        inertia=cuboid_inertia(box, mass),
        center_local=box_center(box),
    )


@dataclass(frozen=True)
class GrabCoupling:
    """A tracker holding an object: the object is pulled toward `target` by a
    spring-damper in both translation and rotation."""

    object_id: int
    cursor: str                 # "left" or "right"
    target: RigidTransform


@dataclass(frozen=True)
class SpringConnector:
    """A spring between two anchors given in each object's local frame.
    display_only connectors are drawn but exert no force."""

    id: int
    object_a: int
    anchor_a: Vec3
    object_b: int
    anchor_b: Vec3
    rest_length: float = 0.0
    stiffness: float = 10.0
    display_only: bool = False


Wrench = tuple[Vec3, Vec3]  # (force, torque about the body's COM)


def coupling_wrench(body: BodyState, grab: GrabCoupling, cfg: PhysicsConfig) -> Wrench:
    """Spring-damper pull toward the grab target."""
    pos = body.world_com()
    target_pos = apply_transform(grab.target, body.center_local)
    force = vsub(
        vscale(vsub(target_pos, pos), cfg.k_lin),
        vscale(body.linear_velocity, cfg.c_lin),
    )
    # rotation error as axis * angle, angle in [0, pi]
    q_err = quat_multiply(grab.target.rotation, quat_conjugate(body.transform.rotation))
    axis, angle = quat_axis_angle(q_err)
    torque = vsub(
        vscale(axis, cfg.k_rot * angle),
        vscale(body.angular_velocity, cfg.c_rot),
    )
    return force, torque


def spring_force(
    conn: SpringConnector, t_a: RigidTransform, t_b: RigidTransform
) -> tuple[Vec3, Vec3, Vec3, float]:
    """Force on end a, plus both world anchors and the current length.
    Force on end b is the exact negation. Zero when nearly coincident or
    display_only."""
    wa = apply_transform(t_a, conn.anchor_a)
    wb = apply_transform(t_b, conn.anchor_b)
    d = vsub(wb, wa)
    dist = vnorm(d)
    if conn.display_only or dist < 1e-9:
        return ZERO, wa, wb, dist
    stretch = dist - conn.rest_length
    f = vscale(d, conn.stiffness * stretch / dist)
    return f, wa, wb, dist


@dataclass
class StepResult:
    moved_ids: list[int]
    reports: list
    stats: object


def _zero_stats(doc: SceneDoc, moving_count: int):
    return collision_mod.CollisionStats(
        n_objects=len(doc.objects),
        n_moving=moving_count,
        pair_tests_executed=0,
        pairs_colliding=0,
        broad_candidates=0,
    )


def _integrate(body: BodyState, force: Vec3, torque: Vec3, dt: float, damping: float) -> None:
    inv_m = 1.0 / body.mass
    v = vadd(body.linear_velocity, vscale(force, dt * inv_m))
    # world torque -> body frame, divide by diagonal inertia, back to world
    q = body.transform.rotation
    t_local = quat_rotate(quat_conjugate(q), torque)
    dw_local = Vec3(
        t_local.x / body.inertia.x,
        t_local.y / body.inertia.y,
        t_local.z / body.inertia.z,
    )
    w = vadd(body.angular_velocity, vscale(quat_rotate(q, dw_local), dt))
    keep = 1.0 - damping
    v = vscale(v, keep)
    w = vscale(w, keep)

    com = body.world_com()
    new_com = vadd(com, vscale(v, dt))
    speed = vnorm(w)
    if speed * dt > 1e-12:
        half = 0.5 * speed * dt
        s = math.sin(half) / speed
        dq = quat_canonical(math.cos(half), w.x * s, w.y * s, w.z * s)
        new_q = quat_multiply(dq, q)
    else:
        new_q = q
    # rotation happens about the COM, so re-derive the frame origin
    offset = quat_rotate(new_q, body.center_local)
    new_translation = vsub(new_com, offset)

    if not (vfinite(v) and vfinite(w) and vfinite(new_translation) and vfinite(new_q)):
        raise NonFiniteState("body state diverged to a non-finite value")
    body.linear_velocity = v
    body.angular_velocity = w
    body.transform = RigidTransform(new_q, new_translation)


def _accumulate_springs(doc: SceneDoc, wrenches: dict, integrable: set[int]) -> None:
    for conn_id in sorted(doc.connectors):
        conn = doc.connectors[conn_id]
        if conn.display_only:
            continue
        obj_a = doc.objects.get(conn.object_a)
        obj_b = doc.objects.get(conn.object_b)
        if obj_a is None or obj_b is None:
            raise DanglingEndpoint(f"connector {conn_id} references a missing object")
        f_a, wa, wb, _ = spring_force(conn, obj_a.state.transform, obj_b.state.transform)
        if f_a == ZERO:
            continue
        if conn.object_a in integrable:
            fa, ta = wrenches[conn.object_a]
            r = vsub(wa, obj_a.state.world_com())
            wrenches[conn.object_a] = (vadd(fa, f_a), vadd(ta, vcross(r, f_a)))
        if conn.object_b in integrable:
            f_b = vscale(f_a, -1.0)
            fb, tb = wrenches[conn.object_b]
            r = vsub(wb, obj_b.state.world_com())
            wrenches[conn.object_b] = (vadd(fb, f_b), vadd(tb, vcross(r, f_b)))


def _accumulate_contacts(
    doc: SceneDoc, reports, wrenches: dict, responders: set[int], cfg: PhysicsConfig
) -> None:
    for rep in reports:
        a, b = rep.pair
        push = vscale(rep.contact_normal, cfg.k_c * rep.penetration_estimate)
        for obj_id, f in ((a, push), (b, vscale(push, -1.0))):
            if obj_id not in responders:
                continue
            body = doc.objects[obj_id].state
            fa, ta = wrenches[obj_id]
            if cfg.contact_torque:
                r = vsub(rep.contact_point, body.world_com())
                ta = vadd(ta, vcross(r, f))
            wrenches[obj_id] = (vadd(fa, f), ta)


def _chain_driver(doc: SceneDoc, chain, moved: set[int]):
    """Pick how a chain follows its moved members: base-pair edits reshape,
    any later member drags the whole chain rigidly."""
    member_set = set(chain.member_ids)
    touched = member_set & moved
    if not touched:
        return None
    base_id, second_id = chain.member_ids[0], chain.member_ids[1]
    if base_id in touched or second_id in touched:
        return ("reshape", None)
    driver = min(touched, key=chain.member_ids.index)
    return ("rigid", driver)


def maintain_chains(doc: SceneDoc, moved: set[int]) -> list[int]:
    """Re-derive chain member transforms after their drivers moved. Returns
    ids whose transforms were rewritten (chain-dependent objects)."""
    rewritten: list[int] = []
    for chain_id in sorted(doc.chains):
        chain = doc.chains[chain_id]
        action = _chain_driver(doc, chain, moved)
        if action is None:
            continue
        kind, driver = action
        members = chain.member_ids
        if kind == "reshape":
            base_t = doc.objects[members[0]].state.transform
            second_t = doc.objects[members[1]].state.transform
            chain.t_ab = relative_transform(base_t, second_t)
            start = 2
        else:
            k = members.index(driver)
            driver_t = doc.objects[driver].state.transform
            base_t = compose(driver_t, inverse(transform_power(chain.t_ab, k)))
            doc.objects[members[0]].state.transform = base_t
            rewritten.append(members[0])
            start = 1
        step_t = base_t
        for i in range(1, len(members)):
            step_t = compose(step_t, chain.t_ab)
            if i >= start and members[i] != driver:
                doc.objects[members[i]].state.transform = step_t
                rewritten.append(members[i])
    return rewritten


def step(doc: SceneDoc, cfg: PhysicsConfig | None = None) -> StepResult:
    """Advance one fixed timestep. Mode comes from the document."""
    cfg = cfg or doc.physics
    mode = doc.physics_mode
    dt = cfg.dt
    grabbed = sorted(g.object_id for g in doc.grabs.values())
    grabbed_set = set(grabbed)

    if mode == "full":
        integrable = sorted(doc.objects)
    elif mode in ("pose", "off"):
        integrable = [i for i in grabbed if i in doc.objects]
    else:
        raise ValueError(f"unknown physics mode {mode!r}")
    integrable_set = set(integrable)

    reports: list = []
    if doc.collisions_enabled and mode in ("pose", "full"):
        reports, stats = collision_mod.collide_scene(doc, mode, frozenset(grabbed_set))
    else:
        stats = _zero_stats(doc, len(grabbed_set))

    wrenches: dict[int, Wrench] = {i: (ZERO, ZERO) for i in integrable}

    # accumulation order is fixed: couplings by object id, then springs by
    # connector id, then contacts by pair; reordering would change float sums
    for cursor in sorted(doc.grabs):
        grab = doc.grabs[cursor]
        if grab.object_id in integrable_set:
            body = doc.objects[grab.object_id].state
            f, t = coupling_wrench(body, grab, cfg)
            fa, ta = wrenches[grab.object_id]
            wrenches[grab.object_id] = (vadd(fa, f), vadd(ta, t))

    if doc.springs_enabled:
        _accumulate_springs(doc, wrenches, integrable_set)

    if reports:
        responders = integrable_set if mode == "full" else (grabbed_set & integrable_set)
        _accumulate_contacts(doc, reports, wrenches, responders, cfg)

    for obj_id in integrable:
        f, t = wrenches[obj_id]
        _integrate(doc.objects[obj_id].state, f, t, dt, cfg.velocity_damping)

    moved = list(integrable)
    moved += maintain_chains(doc, set(integrable))
    return StepResult(moved_ids=sorted(set(moved)), reports=reports, stats=stats)


@dataclass
class RelaxResult:
    converged: bool
    steps_used: int
    final_residual: float
    residual_history: list[float] = field(default_factory=list)


def _spring_residuals(doc: SceneDoc) -> list[tuple[float, float]]:
    """(|length - rest|, rest) for every force-bearing spring."""
    out = []
    for conn_id in sorted(doc.connectors):
        conn = doc.connectors[conn_id]
        if conn.display_only:
            continue
        obj_a = doc.objects.get(conn.object_a)
        obj_b = doc.objects.get(conn.object_b)
        if obj_a is None or obj_b is None:
            raise DanglingEndpoint(f"connector {conn_id} references a missing object")
        _, wa, wb, dist = spring_force(conn, obj_a.state.transform, obj_b.state.transform)
        out.append((abs(dist - conn.rest_length), conn.rest_length))
    return out


def _relax_converged(residuals: list[tuple[float, float]], tol: float) -> bool:
    # tolerance is relative to rest length, floored at 1 nm for short springs
    return all(err <= tol * max(rest, 1.0) for err, rest in residuals)


def relax_springs(
    doc: SceneDoc,
    max_steps: int = 5000,
    tol: float = 0.01,
    cfg: PhysicsConfig | None = None,
) -> RelaxResult:
    """Settle spring networks by heavily damped integration from rest.

    Every body participates. Trackers are ignored; collisions join in only if
    the document has them enabled. Returns immediately when every
    force-bearing spring is already within tolerance.
    """
    cfg = cfg or doc.physics
    ids = sorted(doc.objects)
    for obj_id in ids:
        st = doc.objects[obj_id].state
        st.linear_velocity = ZERO
        st.angular_velocity = ZERO

    residuals = _spring_residuals(doc)
    history = [max((e for e, _ in residuals), default=0.0)]
    if _relax_converged(residuals, tol):
        return RelaxResult(True, 0, history[0], history)

    steps = 0
    converged = False
    for steps in range(1, max_steps + 1):
        wrenches: dict[int, Wrench] = {i: (ZERO, ZERO) for i in ids}
        _accumulate_springs(doc, wrenches, set(ids))
        if doc.collisions_enabled:
            reports, _ = collision_mod.collide_scene(doc, "full", frozenset())
            _accumulate_contacts(doc, reports, wrenches, set(ids), cfg)
        for obj_id in ids:
            f, t = wrenches[obj_id]
            _integrate(doc.objects[obj_id].state, f, t, cfg.dt, cfg.relax_damping)
        maintain_chains(doc, set(ids))
        residuals = _spring_residuals(doc)
        history.append(max((e for e, _ in residuals), default=0.0))
        if _relax_converged(residuals, tol):
            converged = True
            break

    for obj_id in ids:
        st = doc.objects[obj_id].state
        st.linear_velocity = ZERO
        st.angular_velocity = ZERO
    return RelaxResult(converged, steps, history[-1], history)


def snap_connector_to_terminus(
    doc: SceneDoc, connector_id: int, end: str, which: str
) -> SpringConnector:
    """Move one spring anchor onto a molecule's backbone end (N or C)."""
    if end not in ("a", "b"):
        raise ValueError("end must be 'a' or 'b'")
    if which not in ("n", "c"):
        raise ValueError("which must be 'n' or 'c'")
    conn = doc.connectors.get(connector_id)
    if conn is None:
        raise UnknownId(connector_id)
    obj_id = conn.object_a if end == "a" else conn.object_b
    obj = doc.objects.get(obj_id)
    if obj is None:
        raise DanglingEndpoint(f"connector {connector_id} end {end} is dangling")
    asset = doc.meshes[obj.mesh_ref]
    if asset.meta is None:
        raise NoTerminusData(f"mesh of object {obj_id} has no terminus metadata")
    anchor = asset.meta.n_terminus if which == "n" else asset.meta.c_terminus
    if end == "a":
        new_conn = replace(conn, anchor_a=anchor)
    else:
        new_conn = replace(conn, anchor_b=anchor)
    doc.connectors[connector_id] = new_conn
    return new_conn
