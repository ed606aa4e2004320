"""Scene document: objects, groups, replicated chains, connectors, keyframes.

The document is the single source of truth the physics loop, the session
service and the serializer all operate on. Entity ids (objects, groups,
chains, connectors) come from one shared counter, so an id can never be
mistaken for an entity of another kind.
"""

from __future__ import annotations

import bisect
import colorsys
from dataclasses import dataclass, field
from typing import NamedTuple

from .bvh import BvhTree, build_bvh
from .config import PhysicsConfig
from .errors import (
    ConflictingMembership,
    InvalidCommand,
    MeshMismatch,
    TimeOutOfRange,
    UnknownId,
)
from .meshes import LocalBox, TriMesh, box_corners, fit_local_box, mesh_content_hash
from .pdb import MoleculeMeta
from .physics import BodyState, GrabCoupling, SpringConnector, body_for_box
from .splines import sample_path
from .transforms import (
    IDENTITY,
    RigidTransform,
    Vec3,
    apply_transform,
    compose,
    quat_slerp,
    relative_transform,
    transform_power,
)

PHYSICS_MODES = ("full", "pose", "off")
INTERACTION_MODES = ("edit", "animate", "color")
COLORMAPS = ("rainbow", "blue-white-red")
CURSORS = ("left", "right")


class SolidColor(NamedTuple):
    r: float
    g: float
    b: float


class ChannelColor(NamedTuple):
    """Color an object by one of its mesh's vertex scalar channels."""

    channel: str
    colormap: str


Color = SolidColor | ChannelColor
DEFAULT_COLOR = SolidColor(0.8, 0.8, 0.8)


def colormap_rgb(name: str, s: float) -> SolidColor:
    """Map a scalar in [0, 1] to a color. Values outside the range clamp."""
    s = 0.0 if s < 0.0 else (1.0 if s > 1.0 else s)
    if name == "rainbow":
        # blue (s=0) through green to red (s=1)
        r, g, b = colorsys.hsv_to_rgb((1.0 - s) * (240.0 / 360.0), 1.0, 1.0)
        return SolidColor(r, g, b)
    if name == "blue-white-red":
        if s < 0.5:
            u = s * 2.0
            return SolidColor(u, u, 1.0)
        u = (s - 0.5) * 2.0
        return SolidColor(1.0, 1.0 - u, 1.0 - u)
    raise ValueError(f"unknown colormap {name!r}")


@dataclass(frozen=True)
class Keyframe:
    """Complete captured state: where, what color, which group, shown or not."""

    time: float
    transform: RigidTransform
    color: Color
    group_id: int | None
    visible: bool


@dataclass
class MeshAsset:
    content_hash: str
    mesh: TriMesh
    local_box: LocalBox
    bvh: BvhTree | None = None
    meta: MoleculeMeta | None = None
    name: str = ""
    external_path: str | None = None


@dataclass
class SceneObject:
    id: int
    name: str
    mesh_ref: str
    state: BodyState
    color: Color = DEFAULT_COLOR
    group_id: int | None = None
    visible: bool = True
    chain_id: int | None = None
    chain_index: int | None = None
    keyframes: list[Keyframe] = field(default_factory=list)

    def keyframe_at(self, time: float, tol: float = 1e-9) -> Keyframe | None:
        for kf in self.keyframes:
            if abs(kf.time - time) <= tol:
                return kf
        return None


@dataclass
class Group:
    id: int
    name: str = ""


@dataclass
class CrystalChain:
    """n copies of one mesh laid out by a repeated relative step t_ab."""

    id: int
    member_ids: list[int]
    t_ab: RigidTransform


class EvaluatedState(NamedTuple):
    transform: RigidTransform
    color: Color
    group_id: int | None
    visible: bool


EDGE_INDICES = (
    (0, 1), (2, 3), (4, 5), (6, 7),   # along z
    (0, 2), (1, 3), (4, 6), (5, 7),   # along y
    (0, 4), (1, 5), (2, 6), (3, 7),   # along x
)


@dataclass
class OverlayItem:
    object_id: int
    corners: list[Vec3]
    has_keyframe_ribbon: bool


@dataclass
class SelectionOverlay:
    kind: str  # "single" or "group"
    items: list[OverlayItem]
    edges: tuple = EDGE_INDICES


@dataclass
class SceneDoc:
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    duration: float = 10.0
    current_time: float = 0.0
    physics_mode: str = "pose"
    interaction_mode: str = "edit"
    collisions_enabled: bool = True
    springs_enabled: bool = True
    meshes: dict[str, MeshAsset] = field(default_factory=dict)
    objects: dict[int, SceneObject] = field(default_factory=dict)
    groups: dict[int, Group] = field(default_factory=dict)
    chains: dict[int, CrystalChain] = field(default_factory=dict)
    connectors: dict[int, SpringConnector] = field(default_factory=dict)
    grabs: dict[str, GrabCoupling] = field(default_factory=dict)
    selection: list[int] = field(default_factory=list)
    next_id: int = 1

    # -- ids / lookups ---------------------------------------------------

    def _alloc_id(self) -> int:
        out = self.next_id
        self.next_id += 1
        return out

    def require_object(self, object_id: int) -> SceneObject:
        obj = self.objects.get(object_id)
        if obj is None:
            raise UnknownId(object_id)
        return obj

    def grabbed_ids(self) -> list[int]:
        return sorted(g.object_id for g in self.grabs.values())

    def group_members(self, group_id: int) -> list[int]:
        return sorted(o.id for o in self.objects.values() if o.group_id == group_id)

    def _drop_group(self, group_id: int) -> None:
        """Remove a group and every reference to it, keyframed ones included."""
        self.groups.pop(group_id, None)
        for obj in self.objects.values():
            if obj.group_id == group_id:
                obj.group_id = None
            for i, kf in enumerate(obj.keyframes):
                if kf.group_id == group_id:
                    obj.keyframes[i] = Keyframe(
                        time=kf.time,
                        transform=kf.transform,
                        color=kf.color,
                        group_id=None,
                        visible=kf.visible,
                    )

    # -- meshes ------------------------------------------------------------

    def register_mesh(
        self,
        mesh: TriMesh,
        meta: MoleculeMeta | None = None,
        name: str = "",
        external_path: str | None = None,
    ) -> str:
        ref = mesh_content_hash(mesh)
        if ref in self.meshes:
            return ref
        box = fit_local_box(mesh)
        tree = build_bvh(mesh) if mesh.triangle_count else None
        self.meshes[ref] = MeshAsset(
            content_hash=ref,
            mesh=mesh,
            local_box=box,
            bvh=tree,
            meta=meta,
            name=name,
            external_path=external_path,
        )
        return ref

    # -- objects -------------------------------------------------------------

    def spawn(
        self,
        mesh_ref: str,
        transform: RigidTransform = IDENTITY,
        name: str = "",
    ) -> SceneObject:
        asset = self.meshes.get(mesh_ref)
        if asset is None:
            raise UnknownId(mesh_ref)
        obj_id = self._alloc_id()
        obj = SceneObject(
            id=obj_id,
            name=name or (asset.name or f"object-{obj_id}"),
            mesh_ref=mesh_ref,
            state=body_for_box(transform, asset.local_box),
        )
        self.objects[obj_id] = obj
        return obj

    def _expand_to_objects(self, ids: list[int]) -> list[int]:
        out: set[int] = set()
        for entity_id in ids:
            if entity_id in self.objects:
                out.add(entity_id)
            elif entity_id in self.groups:
                out.update(self.group_members(entity_id))
            elif entity_id in self.chains:
                out.update(self.chains[entity_id].member_ids)
            else:
                raise UnknownId(entity_id)
        return sorted(out)

    def delete(self, ids: list[int]) -> list[int]:
        """Remove objects (group and chain ids expand to their members).
        Connectors, grabs and chain links that touch a removed object go too."""
        doomed = set(self._expand_to_objects(ids))
        for entity_id in ids:
            if entity_id in self.groups:
                self._drop_group(entity_id)
            elif entity_id in self.chains:
                self.chains.pop(entity_id)
        for obj_id in sorted(doomed):
            self.objects.pop(obj_id)
        for conn_id in sorted(self.connectors):
            conn = self.connectors[conn_id]
            if conn.object_a in doomed or conn.object_b in doomed:
                del self.connectors[conn_id]
        for cursor in sorted(self.grabs):
            if self.grabs[cursor].object_id in doomed:
                del self.grabs[cursor]
        for chain_id in sorted(self.chains):
            chain = self.chains[chain_id]
            if any(m in doomed for m in chain.member_ids):
                for m in chain.member_ids:
                    if m in self.objects:
                        self.objects[m].chain_id = None
                        self.objects[m].chain_index = None
                del self.chains[chain_id]
        for group_id in sorted(self.groups):
            if not self.group_members(group_id):
                self._drop_group(group_id)
        self.selection = [i for i in self.selection if i not in doomed]
        return sorted(doomed)

    def duplicate(self, ids: list[int]) -> list[int]:
        """Deep-copy objects (meshes stay shared by reference). Groups,
        chains and connectors fully inside the selection are copied and
        remapped; links that leave the selection are dropped."""
        selection = self._expand_to_objects(ids)
        if not selection:
            return []
        sel_set = set(selection)
        remap: dict[int, int] = {}
        group_remap: dict[int, int] = {}

        for group_id in sorted(self.groups):
            if self.group_members(group_id) and set(self.group_members(group_id)) <= sel_set:
                new_group = Group(self._alloc_id(), name=self.groups[group_id].name)
                self.groups[new_group.id] = new_group
                group_remap[group_id] = new_group.id

        for old_id in selection:
            src = self.objects[old_id]
            new_id = self._alloc_id()
            remap[old_id] = new_id
            new_keyframes = [
                Keyframe(
                    time=kf.time,
                    transform=kf.transform,
                    color=kf.color,
                    group_id=group_remap.get(kf.group_id) if kf.group_id is not None else None,
                    visible=kf.visible,
                )
                for kf in src.keyframes
            ]
            self.objects[new_id] = SceneObject(
                id=new_id,
                name=src.name,
                mesh_ref=src.mesh_ref,
                state=BodyState(
                    transform=src.state.transform,
                    linear_velocity=src.state.linear_velocity,
                    angular_velocity=src.state.angular_velocity,
                    mass=src.state.mass,
                    inertia=src.state.inertia,
                    center_local=src.state.center_local,
                ),
                color=src.color,
                group_id=group_remap.get(src.group_id) if src.group_id is not None else None,
                visible=src.visible,
                keyframes=new_keyframes,
            )

        for chain_id in sorted(self.chains):
            chain = self.chains[chain_id]
            if set(chain.member_ids) <= sel_set:
                new_chain = CrystalChain(
                    id=self._alloc_id(),
                    member_ids=[remap[m] for m in chain.member_ids],
                    t_ab=chain.t_ab,
                )
                self.chains[new_chain.id] = new_chain
                for idx, m in enumerate(new_chain.member_ids):
                    self.objects[m].chain_id = new_chain.id
                    self.objects[m].chain_index = idx

        for conn_id in sorted(self.connectors):
            conn = self.connectors[conn_id]
            if conn.object_a in sel_set and conn.object_b in sel_set:
                new_id = self._alloc_id()
                self.connectors[new_id] = SpringConnector(
                    id=new_id,
                    object_a=remap[conn.object_a],
                    anchor_a=conn.anchor_a,
                    object_b=remap[conn.object_b],
                    anchor_b=conn.anchor_b,
                    rest_length=conn.rest_length,
                    stiffness=conn.stiffness,
                    display_only=conn.display_only,
                )
        return [remap[o] for o in selection]

    # -- groups -----------------------------------------------------------------

    def group(self, ids: list[int], name: str = "") -> Group:
        members = self._expand_to_objects(ids)
        if len(members) < 2:
            raise InvalidCommand("a group needs at least two objects")
        for obj_id in members:
            if self.objects[obj_id].group_id is not None:
                raise ConflictingMembership(
                    f"object {obj_id} already belongs to group {self.objects[obj_id].group_id}"
                )
        grp = Group(self._alloc_id(), name=name)
        self.groups[grp.id] = grp
        for obj_id in members:
            self.objects[obj_id].group_id = grp.id
        return grp

    def ungroup(self, group_id: int) -> list[int]:
        if group_id not in self.groups:
            raise UnknownId(group_id)
        members = self.group_members(group_id)
        self._drop_group(group_id)
        return members

    # -- chains ------------------------------------------------------------------

    def chain_create(self, base_id: int, second_id: int, n: int) -> CrystalChain:
        """Replicate the base object n times total, repeating the relative
        step between the first two copies."""
        if n < 2:
            raise InvalidCommand("a chain needs at least two members")
        if base_id == second_id:
            raise InvalidCommand("base and second must differ")
        base = self.require_object(base_id)
        second = self.require_object(second_id)
        if base.mesh_ref != second.mesh_ref:
            raise MeshMismatch("chain members must share one mesh")
        for obj in (base, second):
            if obj.chain_id is not None:
                raise ConflictingMembership(f"object {obj.id} is already in a chain")
        t_ab = relative_transform(base.state.transform, second.state.transform)
        member_ids = [base_id, second_id]
        for _ in range(n - 2):
            copy = self.spawn(base.mesh_ref, base.state.transform, name=base.name)
            copy.color = base.color
            copy.visible = base.visible
            member_ids.append(copy.id)
        chain = CrystalChain(id=self._alloc_id(), member_ids=member_ids, t_ab=t_ab)
        self.chains[chain.id] = chain
        for idx, m in enumerate(member_ids):
            self.objects[m].chain_id = chain.id
            self.objects[m].chain_index = idx
        self.chain_update(chain.id)
        return chain

    def chain_update(self, chain_id: int, t_ab: RigidTransform | None = None) -> None:
        """Re-derive member transforms. With t_ab given (direct entry) every
        member after the base is placed; otherwise the step is re-read from
        the live base pair and members after the second are placed."""
        chain = self.chains.get(chain_id)
        if chain is None:
            raise UnknownId(chain_id)
        members = chain.member_ids
        if t_ab is not None:
            chain.t_ab = t_ab
            start = 1
        else:
            base_t = self.objects[members[0]].state.transform
            second_t = self.objects[members[1]].state.transform
            chain.t_ab = relative_transform(base_t, second_t)
            start = 2
        step_t = self.objects[members[0]].state.transform
        for i in range(1, len(members)):
            step_t = compose(step_t, chain.t_ab)
            if i >= start:
                self.objects[members[i]].state.transform = step_t

    # -- connectors -----------------------------------------------------------------

    def add_connector(
        self,
        object_a: int,
        anchor_a: Vec3,
        object_b: int,
        anchor_b: Vec3,
        rest_length: float = 0.0,
        stiffness: float = 10.0,
        display_only: bool = False,
    ) -> SpringConnector:
        self.require_object(object_a)
        self.require_object(object_b)
        if object_a == object_b:
            raise InvalidCommand("connector endpoints must be two different objects")
        if rest_length < 0.0:
            raise InvalidCommand("rest length cannot be negative")
        conn = SpringConnector(
            id=self._alloc_id(),
            object_a=object_a,
            anchor_a=Vec3(*anchor_a),
            object_b=object_b,
            anchor_b=Vec3(*anchor_b),
            rest_length=float(rest_length),
            stiffness=float(stiffness),
            display_only=bool(display_only),
        )
        self.connectors[conn.id] = conn
        return conn

    # -- grabs ------------------------------------------------------------------------

    def grab_begin(self, cursor: str, object_id: int) -> GrabCoupling:
        if cursor not in CURSORS:
            raise InvalidCommand(f"unknown cursor {cursor!r}")
        obj = self.require_object(object_id)
        if cursor in self.grabs:
            raise InvalidCommand(f"cursor {cursor!r} is already grabbing")
        for other in self.grabs.values():
            if other.object_id == object_id:
                raise InvalidCommand(f"object {object_id} is already grabbed")
        grab = GrabCoupling(object_id=object_id, cursor=cursor, target=obj.state.transform)
        self.grabs[cursor] = grab
        return grab

    def grab_pose(self, cursor: str, target: RigidTransform) -> None:
        grab = self.grabs.get(cursor)
        if grab is None:
            raise InvalidCommand(f"cursor {cursor!r} is not grabbing anything")
        self.grabs[cursor] = GrabCoupling(
            object_id=grab.object_id, cursor=cursor, target=target
        )

    def grab_end(self, cursor: str) -> bool:
        return self.grabs.pop(cursor, None) is not None

    # -- keyframes ----------------------------------------------------------------------

    def _check_time(self, time: float) -> float:
        time = float(time)
        if not (0.0 <= time <= self.duration):
            raise TimeOutOfRange(f"time {time} outside [0, {self.duration}]")
        return time

    def set_keyframe(self, object_id: int, time: float | None = None) -> Keyframe:
        """Capture the object's current state at the given time (defaults to
        the document's current time). A keyframe already at that exact time
        is replaced."""
        obj = self.require_object(object_id)
        t = self._check_time(self.current_time if time is None else time)
        kf = Keyframe(
            time=t,
            transform=obj.state.transform,
            color=obj.color,
            group_id=obj.group_id,
            visible=obj.visible,
        )
        self._insert_keyframe(obj, kf)
        return kf

    def set_membership_keyframe(
        self, object_id: int, time: float, group_id: int | None
    ) -> Keyframe:
        """Keyframe a group membership change at `time`. Other captured
        fields come from the existing keyframe at that time, if any, else
        from the live object."""
        obj = self.require_object(object_id)
        if group_id is not None and group_id not in self.groups:
            raise UnknownId(group_id)
        t = self._check_time(time)
        existing = obj.keyframe_at(t)
        if existing is not None:
            kf = Keyframe(
                time=existing.time,
                transform=existing.transform,
                color=existing.color,
                group_id=group_id,
                visible=existing.visible,
            )
        else:
            kf = Keyframe(
                time=t,
                transform=obj.state.transform,
                color=obj.color,
                group_id=group_id,
                visible=obj.visible,
            )
        self._insert_keyframe(obj, kf)
        return kf

    @staticmethod
    def _insert_keyframe(obj: SceneObject, kf: Keyframe) -> None:
        times = [k.time for k in obj.keyframes]
        i = bisect.bisect_left(times, kf.time)
        if i < len(times) and times[i] == kf.time:
            obj.keyframes[i] = kf
        else:
            obj.keyframes.insert(i, kf)

    def remove_keyframe(self, object_id: int, time: float) -> bool:
        obj = self.require_object(object_id)
        for i, kf in enumerate(obj.keyframes):
            if abs(kf.time - time) <= 1e-9:
                del obj.keyframes[i]
                return True
        return False

    # -- evaluation ----------------------------------------------------------------------

    def _evaluate_object(self, obj: SceneObject, time: float) -> EvaluatedState:
        kfs = obj.keyframes
        if not kfs:
            return EvaluatedState(obj.state.transform, obj.color, obj.group_id, obj.visible)
        if time <= kfs[0].time:
            k = kfs[0]
            return EvaluatedState(k.transform, k.color, k.group_id, k.visible)
        if time >= kfs[-1].time:
            k = kfs[-1]
            return EvaluatedState(k.transform, k.color, k.group_id, k.visible)
        times = [k.time for k in kfs]
        seg = bisect.bisect_right(times, time) - 1
        k0, k1 = kfs[seg], kfs[seg + 1]
        u = (time - k0.time) / (k1.time - k0.time)
        position = sample_path([k.transform.translation for k in kfs], seg, u)
        rotation = quat_slerp(k0.transform.rotation, k1.transform.rotation, u)
        if isinstance(k0.color, SolidColor) and isinstance(k1.color, SolidColor):
            color: Color = SolidColor(
                k0.color.r + (k1.color.r - k0.color.r) * u,
                k0.color.g + (k1.color.g - k0.color.g) * u,
                k0.color.b + (k1.color.b - k0.color.b) * u,
            )
        else:
            color = k0.color  # non-numeric color steps at the next keyframe
        return EvaluatedState(
            RigidTransform(rotation, position), color, k0.group_id, k0.visible
        )

    def evaluate(self, time: float) -> dict[int, EvaluatedState]:
        """Animation state of every object at `time`. Keyframe times are
        reproduced exactly; group and visibility step at keyframes; times
        outside the keyframe range clamp to the nearest end."""
        t = self._check_time(time)
        return {
            obj_id: self._evaluate_object(self.objects[obj_id], t)
            for obj_id in sorted(self.objects)
        }

    def set_time(self, time: float) -> list[int]:
        """Move the playhead: evaluated state becomes the live state for
        every keyframed object. Returns ids whose state was rewritten."""
        t = self._check_time(time)
        self.current_time = t
        changed = []
        for obj_id in sorted(self.objects):
            obj = self.objects[obj_id]
            if not obj.keyframes:
                continue
            ev = self._evaluate_object(obj, t)
            obj.state.transform = ev.transform
            obj.color = ev.color
            obj.group_id = ev.group_id
            obj.visible = ev.visible
            changed.append(obj_id)
        return changed

    # -- selection overlay ------------------------------------------------------------------

    def selection_overlay(self, target_id: int) -> SelectionOverlay:
        """Oriented-box outline data for a selected object or group, plus a
        per-object flag marking a keyframe at the current time (the timeline
        ribbon marker)."""
        if target_id in self.groups:
            kind = "group"
            members = self.group_members(target_id)
        elif target_id in self.objects:
            kind = "single"
            members = [target_id]
        else:
            raise UnknownId(target_id)
        items = []
        for obj_id in members:
            obj = self.objects[obj_id]
            asset = self.meshes[obj.mesh_ref]
            corners = [
                apply_transform(obj.state.transform, c)
                for c in box_corners(asset.local_box)
            ]
            items.append(
                OverlayItem(
                    object_id=obj_id,
                    corners=corners,
                    has_keyframe_ribbon=obj.keyframe_at(self.current_time) is not None,
                )
            )
        return SelectionOverlay(kind=kind, items=items)


def new_document(cfg: PhysicsConfig | None = None) -> SceneDoc:
    return SceneDoc(physics=cfg or PhysicsConfig())
