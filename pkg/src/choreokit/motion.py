"""Pose representation, trajectory recovery, forward kinematics, and
kinematic features.

A pose is the per-frame tuple (r_a, r_x, r_z, r_y, j_p, j_v, j_r, c_f):

    r_a          root angular velocity about the vertical (Y) axis, rad/frame
    r_x, r_z     root linear velocity on the ground (XZ) plane, expressed in
                 the root's heading frame, m/frame
    r_y          root height, m
    j_p  (J,3)   joint positions in the heading-local frame (root at origin)
    j_v  (J,3)   per-frame finite differences of j_p (backward, frame 0 = 0)
    j_r  (J,6)   joint rotations, 6D continuous form (first two columns of
                 the rotation matrix, column-major)
    c_f  (4,)    binary foot-contact flags

Flat layout is that order, so the flat dimension is 8 + 12*J. Velocities are
per frame, not per second; fps is carried alongside for time conversions.

Conventions: Y is up, the ground plane is XZ, and a positive heading angle
turns +Z toward +X (so a root yawed by pi/2 maps a (0,0,1) offset to
(1,0,0)). Headings integrate from 0 at frame 0; the world direction of the
first frame therefore lives in (r_x, r_z). The velocity stored at frame f
moves the root from frame f to frame f+1, which makes the representation
exactly invertible; the last frame's velocities are carried but unused by
integration.

The default skeleton has 24 joints in the usual hips/spine/limbs topology:

    0 pelvis | 1 l_hip 2 r_hip 3 spine1 | 4 l_knee 5 r_knee 6 spine2
    7 l_ankle 8 r_ankle 9 spine3 | 10 l_foot 11 r_foot 12 neck
    13 l_collar 14 r_collar 15 head | 16 l_shoulder 17 r_shoulder
    18 l_elbow 19 r_elbow | 20 l_wrist 21 r_wrist | 22 l_hand 23 r_hand

Foot-contact flags track (l_ankle, r_ankle, l_foot, r_foot).
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SkeletonSpec",
    "Pose",
    "MotionSequence",
    "default_skeleton",
    "DEFAULT_FOOT_JOINTS",
    "pose_dim",
    "rotation_about_y",
    "sixd_to_rotmat",
    "rotmat_to_sixd",
    "identity_sixd",
    "recover_trajectory",
    "forward_kinematics",
    "global_joint_positions",
    "detect_foot_contacts",
    "kinetic_features",
    "save_motion",
    "load_motion",
]


def pose_dim(joint_count: int) -> int:
    return 8 + 12 * joint_count


# ---------------------------------------------------------------------------
# Skeleton
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SkeletonSpec:
    """Joint tree: parent indices (root = joint 0) and rest-pose offsets."""

    parents: np.ndarray   # (J,) int, parents[0] == -1
    offsets: np.ndarray   # (J, 3) float, offset from parent, meters

    def __post_init__(self):
        parents = np.asarray(self.parents, dtype=np.int64)
        offsets = np.asarray(self.offsets, dtype=np.float64)
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "offsets", offsets)
        j = parents.shape[0]
        if j < 2 and not (j == 1 and parents[0] == -1):
            if j < 1:
                raise ValueError("skeleton needs at least one joint")
        if offsets.shape != (j, 3):
            raise ValueError(f"offsets must be ({j}, 3), got {offsets.shape}")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("skeleton offsets must be finite")
        if parents[0] != -1:
            raise ValueError("joint 0 must be the root (parent -1)")
        if np.any(parents[1:] >= np.arange(1, j)) or np.any(parents[1:] < 0):
            raise ValueError("parents must form a tree with parent index < child index")

    @property
    def joint_count(self) -> int:
        return int(self.parents.shape[0])


_DEFAULT_PARENTS = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
    9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21,
]

_DEFAULT_OFFSETS = [
    (0.00, 0.00, 0.00),    # pelvis
    (0.09, -0.05, 0.00),   # l_hip
    (-0.09, -0.05, 0.00),  # r_hip
    (0.00, 0.11, 0.00),    # spine1
    (0.00, -0.40, 0.00),   # l_knee
    (0.00, -0.40, 0.00),   # r_knee
    (0.00, 0.12, 0.00),    # spine2
    (0.00, -0.42, 0.00),   # l_ankle
    (0.00, -0.42, 0.00),   # r_ankle
    (0.00, 0.12, 0.00),    # spine3
    (0.00, -0.05, 0.13),   # l_foot
    (0.00, -0.05, 0.13),   # r_foot
    (0.00, 0.10, 0.00),    # neck
    (0.07, 0.05, 0.00),    # l_collar
    (-0.07, 0.05, 0.00),   # r_collar
    (0.00, 0.12, 0.00),    # head
    (0.10, 0.00, 0.00),    # l_shoulder
    (-0.10, 0.00, 0.00),   # r_shoulder
    (0.26, 0.00, 0.00),    # l_elbow
    (-0.26, 0.00, 0.00),   # r_elbow
    (0.25, 0.00, 0.00),    # l_wrist
    (-0.25, 0.00, 0.00),   # r_wrist
    (0.08, 0.00, 0.00),    # l_hand
    (-0.08, 0.00, 0.00),   # r_hand
]

DEFAULT_FOOT_JOINTS = (7, 8, 10, 11)


def default_skeleton() -> SkeletonSpec:
    """24-joint desk-scale skeleton (topology and offsets in module doc)."""
    return SkeletonSpec(np.array(_DEFAULT_PARENTS), np.array(_DEFAULT_OFFSETS))


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------

def rotation_about_y(angle):
    """Heading rotation matrix; positive angle turns +Z toward +X."""
    a = np.asarray(angle, dtype=np.float64)
    c, s = np.cos(a), np.sin(a)
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def identity_sixd() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def sixd_to_rotmat(sixd: np.ndarray) -> np.ndarray:
    """Orthonormalize a 6D rotation (two leading columns) to a matrix.

    Gram-Schmidt on the two stored columns, cross product for the third.
    Raises on degenerate input (zero-length or parallel columns).
    """
    r = np.asarray(sixd, dtype=np.float64)
    if r.shape[-1] != 6:
        raise ValueError(f"6D rotation must have trailing dim 6, got {r.shape}")
    a1, a2 = r[..., :3], r[..., 3:]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < 1e-8):
        raise ValueError("degenerate 6D rotation: first column has zero length")
    b1 = a1 / n1
    u = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u, axis=-1, keepdims=True)
    if np.any(n2 < 1e-8):
        raise ValueError("degenerate 6D rotation: columns are parallel or second is zero")
    b2 = u / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def rotmat_to_sixd(rot: np.ndarray) -> np.ndarray:
    rot = np.asarray(rot, dtype=np.float64)
    return np.concatenate([rot[..., :, 0], rot[..., :, 1]], axis=-1)


# ---------------------------------------------------------------------------
# Pose / MotionSequence
# ---------------------------------------------------------------------------

@dataclass
class Pose:
    """One frame of the tuple representation (see module doc for fields)."""

    r_a: float
    r_x: float
    r_z: float
    r_y: float
    j_p: np.ndarray   # (J, 3)
    j_v: np.ndarray   # (J, 3)
    j_r: np.ndarray   # (J, 6)
    c_f: np.ndarray   # (4,)

    @property
    def joint_count(self) -> int:
        return int(self.j_p.shape[0])

    def to_flat(self) -> np.ndarray:
        head = np.array([self.r_a, self.r_x, self.r_z, self.r_y])
        return np.concatenate([
            head, self.j_p.ravel(), self.j_v.ravel(), self.j_r.ravel(),
            np.asarray(self.c_f, dtype=np.float64),
        ])

    @classmethod
    def from_flat(cls, flat: np.ndarray, joint_count: int) -> "Pose":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (pose_dim(joint_count),):
            raise ValueError(
                f"flat pose must have dim {pose_dim(joint_count)}, got {flat.shape}")
        j = joint_count
        o = 4
        j_p = flat[o:o + 3 * j].reshape(j, 3); o += 3 * j
        j_v = flat[o:o + 3 * j].reshape(j, 3); o += 3 * j
        j_r = flat[o:o + 6 * j].reshape(j, 6); o += 6 * j
        return cls(flat[0], flat[1], flat[2], flat[3], j_p, j_v, j_r, flat[o:o + 4])


@dataclass
class MotionSequence:
    """F frames of flat pose vectors plus fps and the initial root position."""

    data: np.ndarray                 # (F, 8 + 12J)
    fps: float
    initial_position: np.ndarray = field(
        default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.initial_position = np.asarray(self.initial_position, dtype=np.float64)
        if self.data.ndim != 2 or self.data.shape[0] < 1:
            raise ValueError("motion data must be a nonempty (F, dim) matrix")
        if (self.data.shape[1] - 8) % 12 != 0 or self.data.shape[1] < pose_dim(1):
            raise ValueError(f"flat pose dim {self.data.shape[1]} is not 8 + 12*J")
        if self.initial_position.shape != (3,):
            raise ValueError("initial position must be a 3-vector")
        if not np.all(np.isfinite(self.initial_position)):
            raise ValueError("initial position must be finite")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def frame_count(self) -> int:
        return int(self.data.shape[0])

    @property
    def joint_count(self) -> int:
        return (self.data.shape[1] - 8) // 12

    # column views ----------------------------------------------------------
    @property
    def root_turn(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def root_velocity(self) -> np.ndarray:
        """(F, 2) heading-local (r_x, r_z)."""
        return self.data[:, 1:3]

    @property
    def root_height(self) -> np.ndarray:
        return self.data[:, 3]

    @property
    def joint_positions(self) -> np.ndarray:
        j = self.joint_count
        return self.data[:, 4:4 + 3 * j].reshape(-1, j, 3)

    @property
    def joint_velocities(self) -> np.ndarray:
        j = self.joint_count
        return self.data[:, 4 + 3 * j:4 + 6 * j].reshape(-1, j, 3)

    @property
    def joint_rotations(self) -> np.ndarray:
        j = self.joint_count
        return self.data[:, 4 + 6 * j:4 + 12 * j].reshape(-1, j, 6)

    @property
    def contacts(self) -> np.ndarray:
        return self.data[:, -4:]

    def frame(self, index: int) -> Pose:
        return Pose.from_flat(self.data[index], self.joint_count)

    def validate(self):
        """Strict checks for genuine (non-reconstructed) sequences."""
        if not np.all(np.isfinite(self.data)):
            raise ValueError("motion data contains non-finite values")
        c = self.contacts
        if not np.all((c == 0.0) | (c == 1.0)):
            raise ValueError("contact flags must be binary")
        return self


# ---------------------------------------------------------------------------
# Trajectory and kinematics
# ---------------------------------------------------------------------------

def recover_trajectory(seq: MotionSequence):
    """Integrate root velocities into world positions and headings.

    Returns (positions (F, 3), headings (F,)). positions[0] takes its XZ
    from the sequence's initial position and its height from r_y; frame f's
    stored velocities move the root from f to f+1, with the local (r_x, r_z)
    rotated by the heading at frame f.
    """
    if seq.frame_count < 1:
        raise ValueError("cannot recover trajectory of an empty sequence")
    f = seq.frame_count
    headings = np.zeros(f)
    headings[1:] = np.cumsum(seq.root_turn[:-1])

    positions = np.zeros((f, 3))
    positions[:, 1] = seq.root_height
    cos_h, sin_h = np.cos(headings[:-1]), np.sin(headings[:-1])
    vx, vz = seq.root_velocity[:-1, 0], seq.root_velocity[:-1, 1]
    # R_y(heading) applied to the local velocity: +Z turns toward +X
    dx = cos_h * vx + sin_h * vz
    dz = -sin_h * vx + cos_h * vz
    positions[0, 0] = seq.initial_position[0]
    positions[0, 2] = seq.initial_position[2]
    positions[1:, 0] = positions[0, 0] + np.cumsum(dx)
    positions[1:, 2] = positions[0, 2] + np.cumsum(dz)
    return positions, headings


def trajectory_to_velocities(positions: np.ndarray, headings: np.ndarray):
    """Inverse of :func:`recover_trajectory` for the derivable frames.

    Returns (r_a (F-1,), r_xz (F-1, 2), r_y (F,)); the final frame's
    velocities are not derivable from F positions.
    """
    positions = np.asarray(positions, dtype=np.float64)
    headings = np.asarray(headings, dtype=np.float64)
    r_a = np.diff(headings)
    d = np.diff(positions[:, [0, 2]], axis=0)
    cos_h, sin_h = np.cos(headings[:-1]), np.sin(headings[:-1])
    r_x = cos_h * d[:, 0] - sin_h * d[:, 1]
    r_z = sin_h * d[:, 0] + cos_h * d[:, 1]
    return r_a, np.stack([r_x, r_z], axis=1), positions[:, 1].copy()


def forward_kinematics(skeleton: SkeletonSpec, rotations: np.ndarray,
                       root_position: np.ndarray) -> np.ndarray:
    """Global joint positions from local 6D rotations.

    `rotations` is (J, 6) for one frame or (F, J, 6) batched; the returned
    positions are (J, 3) or (F, J, 3) with the root pinned at root_position.
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    single = rotations.ndim == 2
    if single:
        rotations = rotations[None]
    f, j = rotations.shape[0], rotations.shape[1]
    if j != skeleton.joint_count:
        raise ValueError(
            f"rotation count {j} does not match skeleton ({skeleton.joint_count})")
    root_position = np.asarray(root_position, dtype=np.float64)

    local = sixd_to_rotmat(rotations)            # (F, J, 3, 3)
    glob_rot = np.empty_like(local)
    glob_pos = np.empty((f, j, 3))
    glob_rot[:, 0] = local[:, 0]
    glob_pos[:, 0] = root_position
    for child in range(1, j):
        parent = skeleton.parents[child]
        glob_rot[:, child] = glob_rot[:, parent] @ local[:, child]
        glob_pos[:, child] = glob_pos[:, parent] + (
            glob_rot[:, parent] @ skeleton.offsets[child])
    return (glob_pos[0], glob_rot[0]) if False else (glob_pos[0] if single else glob_pos)


def global_joint_positions(seq: MotionSequence, skeleton: SkeletonSpec) -> np.ndarray:
    """(F, J, 3) world-frame joint positions.

    Forward kinematics in the heading-local frame, rotated by the recovered
    heading and translated by the recovered trajectory.
    """
    positions, headings = recover_trajectory(seq)
    local = forward_kinematics(skeleton, seq.joint_rotations, np.zeros(3))
    rot = rotation_about_y(headings)             # (F, 3, 3)
    world = np.einsum("fab,fjb->fja", rot, local)
    return world + positions[:, None, :]


def detect_foot_contacts(seq: MotionSequence, skeleton: SkeletonSpec,
                         foot_joints=DEFAULT_FOOT_JOINTS,
                         height_thresh: float = 0.05,
                         speed_thresh: float = 0.01) -> np.ndarray:
    """(F, 4) binary flags: foot is low and barely moving.

    A flag is 1 iff the joint's global height < height_thresh and its
    per-frame global speed < speed_thresh. Frame 0 reuses frame 1's speed.
    """
    foot_joints = tuple(int(i) for i in foot_joints)
    if len(foot_joints) != 4:
        raise ValueError("exactly 4 foot joints expected")
    j = seq.joint_count
    if any(i < 0 or i >= j for i in foot_joints):
        raise ValueError(f"foot joint index out of range for J={j}")

    world = global_joint_positions(seq, skeleton)[:, foot_joints, :]
    heights = world[:, :, 1]
    speeds = np.zeros_like(heights)
    if seq.frame_count > 1:
        speeds[1:] = np.linalg.norm(np.diff(world, axis=0), axis=-1)
        speeds[0] = speeds[1]
    return ((heights < height_thresh) & (speeds < speed_thresh)).astype(np.float64)


def kinetic_features(seq: MotionSequence, skeleton: SkeletonSpec) -> np.ndarray:
    """Per-joint mean squared global velocity magnitude, (J,), m^2/frame^2."""
    if seq.frame_count < 2:
        raise ValueError("kinetic features need at least 2 frames")
    world = global_joint_positions(seq, skeleton)
    vel = np.diff(world, axis=0)
    return np.mean(np.sum(vel * vel, axis=-1), axis=0)


# ---------------------------------------------------------------------------
# Motion file format: text header + one flat pose vector per line
# ---------------------------------------------------------------------------

def save_motion(path, seq: MotionSequence):
    x = seq.initial_position
    header = (
        f"MOTION v1 J={seq.joint_count} F={seq.frame_count} "
        f"fps={seq.fps!r} x={x[0]!r},{x[1]!r},{x[2]!r}"
    )
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in seq.data:
            fh.write(" ".join(repr(v) for v in row) + "\n")


def load_motion(path) -> MotionSequence:
    with open(path) as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) != 6 or parts[0] != "MOTION" or parts[1] != "v1":
            raise ValueError(f"{path}: not a MOTION v1 file (header {header!r})")
        try:
            fields = dict(p.split("=", 1) for p in parts[2:])
            j = int(fields["J"])
            f = int(fields["F"])
            fps = float(fields["fps"])
            x = np.array([float(v) for v in fields["x"].split(",")])
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{path}: malformed MOTION header: {exc}") from exc
        data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if data.shape != (f, pose_dim(j)):
        raise ValueError(
            f"{path}: expected {f} x {pose_dim(j)} pose matrix, got {data.shape}")
    return MotionSequence(data, fps=fps, initial_position=x)
