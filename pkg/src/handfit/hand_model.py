"""Parametric hand-model assets: template mesh, PCA bases, regressors, texture space.

Assets are held as float64 torch tensors whose values are exactly
float32-representable, so the on-disk format (little-endian float32 blocks)
round-trips bit-exactly.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import torch
from scipy.ndimage import gaussian_filter

DTYPE = torch.float64

ASSET_MAGIC = "handfit-assets"
ASSET_VERSION = 1

N_SHAPE = 20
N_POSE = 30
N_TEX = 10
N_MANO_JOINTS = 21

# Toy hand layout: five digit directions (radians, in the palm plane, fingers
# fanning around +x, wrist toward -x) with per-digit length/width of the
# outline bump.
_DIGIT_ANGLES = (-1.01, -0.42, -0.10, 0.21, 0.52)
_DIGIT_LENGTHS = (0.050, 0.068, 0.075, 0.068, 0.052)
_DIGIT_WIDTHS = (0.11, 0.062, 0.060, 0.058, 0.055)
_FAN_CENTER = -0.25
_FAN_SPREAD = 0.85
_HALF_THICKNESS = 0.011
_WRIST = np.array([-0.050, 0.0, 0.0])

# Physical scale of one unit of each PCA coefficient. Kept small so that the
# default Adam schedule can traverse the sampled coefficient range.
_SHAPE_AMPLITUDE = 0.0012   # meters of max vertex displacement per unit beta
_POSE_AMPLITUDE = 0.035     # radians of max joint rotation per unit theta
_ROOT_AMPLITUDE = 0.025     # extra root wobble mixed into every component
_TEX_AMPLITUDE = 0.10       # albedo range per unit alpha


class AssetError(ValueError):
    """Raised when an asset file cannot be parsed or violates an invariant."""


@dataclass
class HandModelAssets:
    """Immutable bundle of everything the forward model needs."""

    seed: int
    template_vertices: torch.Tensor   # [V,3] meters
    faces: torch.Tensor               # [F,3] int64
    uv_coords: torch.Tensor           # [V,2] in [0,1]^2
    shape_basis: torch.Tensor         # [N_SHAPE,V,3]
    pose_basis: torch.Tensor          # [N_POSE,J,3] axis-angle per joint
    joint_tree: torch.Tensor          # [J] parent index, root = -1
    skinning_weights: torch.Tensor    # [V,J] rows sum to 1
    joint_regressor: torch.Tensor     # [J,V] convex rows
    mano_vertex_regressor: torch.Tensor  # [VM,V] convex rows
    mano_joint_regressor: torch.Tensor   # [21,VM] convex rows
    mano_faces: torch.Tensor          # [FM,3] topology of the regressed mesh
    texture_mean: torch.Tensor        # [R,R,3] in [0,1]
    texture_basis: torch.Tensor       # [N_TEX,R,R,3]

    @property
    def num_vertices(self) -> int:
        return self.template_vertices.shape[0]

    @property
    def num_joints(self) -> int:
        return self.joint_tree.shape[0]

    @property
    def num_mano_vertices(self) -> int:
        return self.mano_vertex_regressor.shape[0]

    @property
    def texture_res(self) -> int:
        return self.texture_mean.shape[0]


class ParamState:
    """The optimized parameter vector: shape, pose, texture, lighting.

    ``trans`` is an optional global translation used only when a fit enables
    it; it defaults to zero and is excluded from regularization.
    """

    FIELDS = ("beta", "theta", "alpha", "light", "trans")
    SIZES = {"beta": N_SHAPE, "theta": N_POSE, "alpha": N_TEX, "light": 6, "trans": 3}

    def __init__(self, beta=None, theta=None, alpha=None, light=None, trans=None):
        self.beta = self._coerce("beta", beta)
        self.theta = self._coerce("theta", theta)
        self.alpha = self._coerce("alpha", alpha)
        self.light = self._coerce("light", light)
        self.trans = self._coerce("trans", trans)
        if torch.any(self.light[3:] < 0):
            raise ValueError("light color components must be non-negative")

    @staticmethod
    def _coerce(name: str, value) -> torch.Tensor:
        n = ParamState.SIZES[name]
        if value is None:
            t = torch.zeros(n, dtype=DTYPE)
            if name == "light":
                t[2] = 1.0
                t[3:] = 1.0
            return t
        t = torch.as_tensor(value, dtype=DTYPE).reshape(-1).clone()
        if t.numel() != n:
            raise ValueError(f"{name} must have {n} entries, got {t.numel()}")
        return t

    def tensors(self) -> dict[str, torch.Tensor]:
        return {name: getattr(self, name) for name in self.FIELDS}

    def clone(self) -> "ParamState":
        return ParamState(**{k: v.detach().clone() for k, v in self.tensors().items()})

    def requires_grad_(self, flag: bool = True) -> "ParamState":
        for t in self.tensors().values():
            t.requires_grad_(flag)
        return self

    def to_dict(self) -> dict:
        return {k: v.detach().tolist() for k, v in self.tensors().items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamState":
        return cls(**{k: d[k] for k in cls.FIELDS if k in d})

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamState):
            return NotImplemented
        return all(torch.equal(getattr(self, f), getattr(other, f)) for f in self.FIELDS)


def _wrap_angle(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _warped_longitudes(b: int) -> np.ndarray:
    """Column angles, densified across the digit fan so few columns still resolve it."""
    fine = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    density = 1.0 + 1.35 * np.exp(-0.5 * (_wrap_angle(fine - _FAN_CENTER) / _FAN_SPREAD) ** 2)
    cdf = np.cumsum(density)
    cdf /= cdf[-1]
    t = np.arange(b, dtype=np.float64) / b
    idx = np.searchsorted(cdf, t)
    return fine[np.clip(idx, 0, fine.size - 1)]


def _outline_radius(phi: np.ndarray) -> np.ndarray:
    """Palm-plane outline: an oval palm plus one radial bump per digit."""
    rho = 0.040 + 0.012 * np.cos(phi - np.pi)
    for ang, length, width in zip(_DIGIT_ANGLES, _DIGIT_LENGTHS, _DIGIT_WIDTHS):
        rho = rho + length * np.exp(-0.5 * (_wrap_angle(phi - ang) / width) ** 2)
    return rho


def _grid_dims(v: int) -> tuple[int, int]:
    """Factor V-2 into rows x cols, preferring cols ~ sqrt(2 (V-2))."""
    n = v - 2
    target = np.sqrt(2.0 * n)
    best = (1, n)
    for rows in range(1, n + 1):
        if n % rows:
            continue
        cols = n // rows
        if abs(cols - target) < abs(best[1] - target):
            best = (rows, cols)
    return best


def _sphere_grid_mesh(a: int, b: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vertices of the swept-outline surface plus faces, UVs, and (phi, psi) params.

    Topology is a closed lat-long sphere: a rows of b columns plus two poles
    (index V-2 = bottom, V-1 = top).
    """
    phis = _warped_longitudes(b)
    psis = -0.5 * np.pi + np.pi * (np.arange(a) + 1.0) / (a + 1.0)
    phi_g, psi_g = np.meshgrid(phis, psis)         # [a,b]
    rho = _outline_radius(phi_g)
    x = np.cos(psi_g) * rho * np.cos(phi_g)
    y = np.cos(psi_g) * rho * np.sin(phi_g)
    z = _HALF_THICKNESS * np.sin(psi_g)
    grid = np.stack([x, y, z], axis=-1).reshape(a * b, 3)
    bottom = np.array([[0.0, 0.0, -_HALF_THICKNESS]])
    top = np.array([[0.0, 0.0, _HALF_THICKNESS]])
    verts = np.concatenate([grid, bottom, top], axis=0)

    uv_u = (np.arange(b) + 0.5) / b
    uv_v = (np.arange(a) + 1.0) / (a + 1.0)
    uu, vv = np.meshgrid(uv_u, uv_v)
    uvs = np.concatenate(
        [np.stack([uu, vv], axis=-1).reshape(a * b, 2), [[0.5, 0.0], [0.5, 1.0]]], axis=0
    )

    params = np.concatenate(
        [np.stack([phi_g, psi_g], axis=-1).reshape(a * b, 2),
         [[0.0, -0.5 * np.pi], [0.0, 0.5 * np.pi]]], axis=0
    )

    def vid(i: int, j: int) -> int:
        return i * b + (j % b)

    faces = []
    for i in range(a - 1):
        for j in range(b):
            v00, v01 = vid(i, j), vid(i, j + 1)
            v10, v11 = vid(i + 1, j), vid(i + 1, j + 1)
            faces.append([v00, v01, v11])
            faces.append([v00, v11, v10])
    bot, top_i = a * b, a * b + 1
    for j in range(b):
        faces.append([bot, vid(0, j + 1), vid(0, j)])
        faces.append([top_i, vid(a - 1, j), vid(a - 1, j + 1)])
    faces = np.asarray(faces, dtype=np.int64)

    # orient faces outward (positive enclosed volume)
    p0, p1, p2 = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    volume = np.sum(np.einsum("ij,ij->i", p0, np.cross(p1, p2))) / 6.0
    if volume < 0:
        faces = faces[:, [0, 2, 1]]
    return verts, faces, uvs, params


def _digit_joint_counts(j: int) -> list[int]:
    """Distribute J-1 chain joints over the five digits, middle first."""
    order = [2, 1, 3, 0, 4]
    counts = [0] * 5
    for k in range(j - 1):
        counts[order[k % 5]] += 1
    return counts


def _skeleton(j: int) -> tuple[np.ndarray, np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Joint positions, parent indices, and one bone segment per joint."""
    positions = [_WRIST.copy()]
    parents = [-1]
    bones = [(np.array([-0.075, 0.0, 0.0]), np.array([0.015, 0.0, 0.0]))]
    counts = _digit_joint_counts(j)
    for f, count in enumerate(counts):
        if count == 0:
            continue
        ang = _DIGIT_ANGLES[f]
        direction = np.array([np.cos(ang), np.sin(ang), 0.0])
        base = _outline_radius(np.array([ang]))[0] - _DIGIT_LENGTHS[f]
        radii = base + (0.05 + 0.70 * np.arange(count) / max(count - 1, 1)) * _DIGIT_LENGTHS[f]
        parent = 0
        for r in radii:
            positions.append(r * direction)
            parents.append(parent)
            parent = len(positions) - 1
        for k in range(count):
            idx = len(positions) - count + k
            start = positions[parents[idx]] if k > 0 else (base * 0.7) * direction
            bones.append((np.asarray(start), positions[idx]))
    return np.asarray(positions), np.asarray(parents, dtype=np.int64), bones


def _point_segment_dist(points: np.ndarray, seg_a: np.ndarray, seg_b: np.ndarray) -> np.ndarray:
    d = seg_b - seg_a
    denom = float(np.dot(d, d))
    if denom < 1e-18:
        return np.linalg.norm(points - seg_a, axis=1)
    t = np.clip((points - seg_a) @ d / denom, 0.0, 1.0)
    nearest = seg_a + t[:, None] * d
    return np.linalg.norm(points - nearest, axis=1)


def _mano_targets(joints: np.ndarray) -> np.ndarray:
    """21 keypoint targets: wrist then 4 landmarks (knuckle..tip) per digit."""
    targets = [joints[0]]
    for f in range(5):
        ang = _DIGIT_ANGLES[f]
        direction = np.array([np.cos(ang), np.sin(ang), 0.0])
        tip_r = _outline_radius(np.array([ang]))[0] - 0.03 * _DIGIT_LENGTHS[f]
        base_r = tip_r - 0.94 * _DIGIT_LENGTHS[f]
        for frac in (0.0, 0.38, 0.70, 1.0):
            targets.append((base_r + frac * (tip_r - base_r)) * direction)
    return np.asarray(targets)


def _smooth_grid_field(rng: np.random.Generator, a: int, b: int, sigma: float) -> np.ndarray:
    """Per-vertex 3-vector field, smoothed over the lat-long grid (wrap in phi)."""
    noise = rng.standard_normal((a, b, 3))
    smooth = np.stack(
        [gaussian_filter(noise[..., c], sigma=sigma, mode=("nearest", "wrap")) for c in range(3)],
        axis=-1,
    )
    poles = np.stack([smooth[0].mean(axis=0), smooth[-1].mean(axis=0)], axis=0)
    return np.concatenate([smooth.reshape(a * b, 3), poles], axis=0)


def _smooth_texture(rng: np.random.Generator, r: int, sigma: float, channels: int = 3) -> np.ndarray:
    noise = rng.standard_normal((r, r, channels))
    out = np.stack(
        [gaussian_filter(noise[..., c], sigma=sigma, mode="wrap") for c in range(channels)],
        axis=-1,
    )
    return out / max(np.abs(out).max(), 1e-12)


def generate_toy_assets(seed: int, config: dict | None = None) -> HandModelAssets:
    """Procedurally build a small stand-in asset bundle.

    The mesh is a closed lat-long surface swept around a five-digit palm
    outline; the skeleton, skinning, regressors, and PCA bases are derived
    from the same layout. Deterministic in ``seed``.

    config keys: V (vertices, >= 12), J (joints, >= 3), R (texture res, >= 16).
    """
    cfg = {"V": 512, "J": 16, "R": 64}
    if config:
        cfg.update(config)
    v, j, r = int(cfg["V"]), int(cfg["J"]), int(cfg["R"])
    if v < 12:
        raise ValueError(f"V must be >= 12, got {v}")
    if j < 3:
        raise ValueError(f"J must be >= 3, got {j}")
    if r < 16:
        raise ValueError(f"R must be >= 16, got {r}")

    rng = np.random.default_rng(seed)
    a, b = _grid_dims(v)
    verts, faces, uvs, _ = _sphere_grid_mesh(a, b)
    verts = verts + 0.004 * _smooth_grid_field(rng, a, b, sigma=2.5)

    joints, parents, bones = _skeleton(j)

    # skinning: gaussian falloff from each joint's bone segment
    dists = np.stack([_point_segment_dist(verts, s, e) for s, e in bones], axis=1)
    sw = np.exp(-((dists / 0.013) ** 2))
    sw[:, 0] += 1e-4  # root catches far-field vertices
    sw /= sw.sum(axis=1, keepdims=True)

    # joints regressed from nearby vertices
    jd = np.linalg.norm(verts[None, :, :] - joints[:, None, :], axis=2)
    jreg = np.exp(-((jd / 0.016) ** 2))
    jreg /= jreg.sum(axis=1, keepdims=True)

    # coarse grid over the same surface: regressed "marker" mesh + topology
    vm = max(14, min(128, v // 4))
    am, bm = _grid_dims(vm)
    mverts, mfaces, _, mparams = _sphere_grid_mesh(am, bm)
    vreg = _coarse_bilinear_regressor(mparams, a, b, v)
    mpos = vreg @ verts

    # 21 keypoints from the marker mesh
    targets = _mano_targets(joints)
    md = np.linalg.norm(mpos[None, :, :] - targets[:, None, :], axis=2)
    mjreg = np.exp(-((md / 0.014) ** 2))
    mjreg /= mjreg.sum(axis=1, keepdims=True)

    shape_basis = np.stack(
        [_smooth_grid_field(rng, a, b, sigma=2.2) for _ in range(N_SHAPE)], axis=0
    )
    norms = np.linalg.norm(shape_basis, axis=2).max(axis=1)
    shape_basis *= _SHAPE_AMPLITUDE / np.maximum(norms, 1e-12)[:, None, None]

    pose_basis = np.zeros((N_POSE, j, 3))
    for k in range(N_POSE):
        touched = rng.choice(np.arange(1, j), size=min(3, j - 1), replace=False)
        axes = rng.standard_normal((touched.size, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        scales = rng.uniform(0.4, 1.0, size=touched.size) * _POSE_AMPLITUDE
        pose_basis[k, touched] = axes * scales[:, None]
        pose_basis[k, 0] = rng.uniform(-_ROOT_AMPLITUDE, _ROOT_AMPLITUDE, size=3)

    base_tone = np.array([0.78, 0.62, 0.52])
    pattern = _smooth_texture(rng, r, sigma=r / 7.0, channels=1)
    chroma = _smooth_texture(rng, r, sigma=r / 12.0)
    tex_mean = base_tone + 0.17 * pattern * np.array([1.0, 0.85, 0.7]) + 0.05 * chroma
    tex_mean = np.clip(tex_mean, 0.12, 0.95)
    tex_basis = np.stack(
        [_TEX_AMPLITUDE * _smooth_texture(rng, r, sigma=r / 9.0) for _ in range(N_TEX)], axis=0
    )

    def t32(arr: np.ndarray) -> torch.Tensor:
        return torch.from_numpy(np.ascontiguousarray(arr, dtype=np.float32)).to(DTYPE)

    assets = HandModelAssets(
        seed=seed,
        template_vertices=t32(verts),
        faces=torch.from_numpy(faces),
        uv_coords=t32(uvs),
        shape_basis=t32(shape_basis),
        pose_basis=t32(pose_basis),
        joint_tree=torch.from_numpy(parents),
        skinning_weights=t32(sw),
        joint_regressor=t32(jreg),
        mano_vertex_regressor=t32(vreg),
        mano_joint_regressor=t32(mjreg),
        mano_faces=torch.from_numpy(mfaces),
        texture_mean=t32(tex_mean),
        texture_basis=t32(tex_basis),
    )
    # float32 rounding can nudge row sums off 1; renormalize in float32 space
    for name in ("skinning_weights", "joint_regressor", "mano_vertex_regressor",
                 "mano_joint_regressor"):
        w32 = getattr(assets, name).to(torch.float32)
        w32 = w32 / w32.sum(dim=1, keepdim=True)
        setattr(assets, name, w32.to(DTYPE))
    validate_assets(assets)
    return assets


def _coarse_bilinear_regressor(mparams: np.ndarray, a: int, b: int, v: int) -> np.ndarray:
    """Convex weights expressing each coarse grid point in fine-grid vertices."""
    phis = _warped_longitudes(b)
    psis = -0.5 * np.pi + np.pi * (np.arange(a) + 1.0) / (a + 1.0)
    vm = mparams.shape[0]
    reg = np.zeros((vm, v))
    for m in range(vm):
        phi, psi = mparams[m]
        if m == vm - 2:
            reg[m, v - 2] = 1.0
            continue
        if m == vm - 1:
            reg[m, v - 1] = 1.0
            continue
        # latitude cell (clamped to the interior rows)
        i1 = int(np.searchsorted(psis, psi))
        i0 = max(i1 - 1, 0)
        i1 = min(i1, a - 1)
        tpsi = 0.0 if i0 == i1 else np.clip((psi - psis[i0]) / (psis[i1] - psis[i0]), 0.0, 1.0)
        # longitude cell with wraparound
        j1 = int(np.searchsorted(phis, phi))
        j0 = (j1 - 1) % b
        j1 = j1 % b
        span = (phis[j1] - phis[j0]) % (2.0 * np.pi)
        tphi = 0.0 if span < 1e-12 else np.clip(((phi - phis[j0]) % (2.0 * np.pi)) / span, 0.0, 1.0)
        for ii, wps in ((i0, 1.0 - tpsi), (i1, tpsi)):
            for jj, wph in ((j0, 1.0 - tphi), (j1, tphi)):
                reg[m, ii * b + jj] += wps * wph
    return reg


def diffuse_map(assets: HandModelAssets, alpha: torch.Tensor) -> torch.Tensor:
    """Diffuse texture for coefficients alpha: mean + sum_k alpha_k basis_k, clamped to [0,1]."""
    alpha = torch.as_tensor(alpha, dtype=DTYPE)
    tex = assets.texture_mean + torch.einsum("k,khwc->hwc", alpha, assets.texture_basis)
    return torch.clamp(tex, 0.0, 1.0)


def validate_assets(assets: HandModelAssets) -> None:
    """Check every structural invariant; raise AssetError naming the failing field."""
    v = assets.num_vertices
    sw = assets.skinning_weights
    if torch.any(sw < 0):
        raise AssetError("skinning_weights: negative entry")
    if not torch.allclose(sw.sum(dim=1), torch.ones(v, dtype=DTYPE), atol=1e-6, rtol=0.0):
        raise AssetError("skinning_weights: rows must sum to 1 within 1e-6")
    if int(assets.faces.max()) >= v or int(assets.faces.min()) < 0:
        raise AssetError("faces: vertex index out of range")
    if torch.any(assets.uv_coords < 0) or torch.any(assets.uv_coords > 1):
        raise AssetError("uv_coords: values outside [0,1]")
    tree = assets.joint_tree.tolist()
    roots = [i for i, p in enumerate(tree) if p < 0]
    if len(roots) != 1:
        raise AssetError(f"joint_tree: expected exactly one root, found {len(roots)}")
    for i, p in enumerate(tree):
        seen = set()
        while p >= 0:
            if p >= len(tree) or p in seen:
                raise AssetError("joint_tree: cycle or invalid parent index")
            seen.add(p)
            p = tree[p]
        if i in seen:
            raise AssetError("joint_tree: cycle detected")
    for name in ("joint_regressor", "mano_vertex_regressor", "mano_joint_regressor"):
        w = getattr(assets, name)
        ones = torch.ones(w.shape[0], dtype=DTYPE)
        if not torch.allclose(w.sum(dim=1), ones, atol=1e-6, rtol=0.0):
            raise AssetError(f"{name}: rows must sum to 1 within 1e-6")
    if int(assets.mano_faces.max()) >= assets.num_mano_vertices:
        raise AssetError("mano_faces: vertex index out of range")
    if assets.mano_joint_regressor.shape[0] != N_MANO_JOINTS:
        raise AssetError("mano_joint_regressor: expected 21 rows")


_TENSOR_ORDER = (
    ("template_vertices", np.float32),
    ("faces", np.int32),
    ("uv_coords", np.float32),
    ("shape_basis", np.float32),
    ("pose_basis", np.float32),
    ("joint_tree", np.int32),
    ("skinning_weights", np.float32),
    ("joint_regressor", np.float32),
    ("mano_vertex_regressor", np.float32),
    ("mano_joint_regressor", np.float32),
    ("mano_faces", np.int32),
    ("texture_mean", np.float32),
    ("texture_basis", np.float32),
)


def save_assets(assets: HandModelAssets, path) -> None:
    """Write the single-file container: text header, then raw little-endian blocks."""
    lines = [f"{ASSET_MAGIC} {ASSET_VERSION}", f"seed {assets.seed}"]
    blobs = []
    for name, np_dtype in _TENSOR_ORDER:
        arr = getattr(assets, name).detach().cpu().numpy()
        arr = np.ascontiguousarray(arr, dtype=np_dtype)
        code = "f4" if np_dtype == np.float32 else "i4"
        shape = " ".join(str(s) for s in arr.shape)
        lines.append(f"tensor {name} {code} {shape}")
        blobs.append(arr.astype("<" + code).tobytes())
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for blob in blobs:
            fh.write(blob)


def load_assets(path) -> HandModelAssets:
    """Parse an asset container and validate every invariant before returning."""
    with open(path, "rb") as fh:
        data = fh.read()
    head_end = data.find(b"end\n")
    if head_end < 0:
        raise AssetError("asset file: missing header terminator")
    header = data[:head_end].decode("ascii", errors="replace").splitlines()
    body = io.BytesIO(data[head_end + 4:])
    if not header or not header[0].startswith(ASSET_MAGIC):
        raise AssetError("asset file: bad magic")
    version = int(header[0].split()[1])
    if version != ASSET_VERSION:
        raise AssetError(f"asset file: unsupported version {version}")
    seed = 0
    specs = []
    for line in header[1:]:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "seed":
            seed = int(parts[1])
        elif parts[0] == "tensor":
            specs.append((parts[1], parts[2], tuple(int(s) for s in parts[3:])))
        else:
            raise AssetError(f"asset file: unknown header entry {parts[0]!r}")
    expected = [name for name, _ in _TENSOR_ORDER]
    if [s[0] for s in specs] != expected:
        raise AssetError("asset file: tensor list does not match the expected layout")
    tensors = {}
    for name, code, shape in specs:
        count = int(np.prod(shape)) if shape else 1
        raw = body.read(count * 4)
        if len(raw) != count * 4:
            raise AssetError(f"asset file: truncated block for {name}")
        arr = np.frombuffer(raw, dtype="<" + code).reshape(shape)
        if code == "f4":
            tensors[name] = torch.from_numpy(arr.astype(np.float32)).to(DTYPE)
        else:
            tensors[name] = torch.from_numpy(arr.astype(np.int64))
    assets = HandModelAssets(seed=seed, **tensors)
    validate_assets(assets)
    return assets
