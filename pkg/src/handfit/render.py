"""Differentiable pinhole projection and soft rasterization.

Silhouette coverage is sigmoid-of-signed-distance per triangle, aggregated
with a probabilistic union, so it is smooth in the geometry. Color uses a
hard z-test among covering triangles; in the default "band" mode the color is
extended slightly past triangle boundaries (clamped barycentrics) and
modulated by the soft silhouette, which keeps the rendered image continuous
in the geometry parameters. "hard" mode leaves color unmodulated and cut off
exactly at coverage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .hand_model import DTYPE
from .kinematics import PosedHand


class ProjectionError(ValueError):
    """A point is at or behind the camera plane."""


@dataclass
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(fx=d["fx"], fy=d["fy"], cx=d["cx"], cy=d["cy"],
                   width=int(d["width"]), height=int(d["height"]))


@dataclass
class SoftSettings:
    tau: float = 1.0           # sigmoid softness, pixels
    ambient: float = 0.3       # constant ambient term in the shading
    cutoff: float = 4.0        # candidate band half-width, in units of tau
    color_mode: str = "band"   # "band" | "hard"
    sil_floor: float = 1e-3    # band mode: minimum coverage that receives color

    def to_dict(self) -> dict:
        return {"tau": self.tau, "ambient": self.ambient, "cutoff": self.cutoff,
                "color_mode": self.color_mode, "sil_floor": self.sil_floor}

    @classmethod
    def from_dict(cls, d: dict) -> "SoftSettings":
        return cls(**d)


@dataclass
class RenderedImage:
    rgb: torch.Tensor         # [H,W,3] in [0,1]
    silhouette: torch.Tensor  # [H,W] in [0,1]
    depth: torch.Tensor       # [H,W], +inf where empty


def project(points3d: torch.Tensor, cam: CameraIntrinsics) -> torch.Tensor:
    """Pinhole projection to pixel coordinates (u, v)."""
    pts = torch.as_tensor(points3d, dtype=DTYPE)
    z = pts[:, 2]
    bad = (z <= 0).nonzero()
    if bad.numel():
        raise ProjectionError(f"point {int(bad[0])} has non-positive depth")
    u = cam.fx * pts[:, 0] / z + cam.cx
    v = cam.fy * pts[:, 1] / z + cam.cy
    return torch.stack([u, v], dim=1)


def shade_lambertian(albedo: torch.Tensor, normal: torch.Tensor,
                     light: torch.Tensor, ambient: float) -> torch.Tensor:
    """out_c = albedo_c * (ambient + color_c * max(0, n . dhat)), clamped to [0,1]."""
    light = torch.as_tensor(light, dtype=DTYPE)
    direction = light[:3]
    dhat = direction / torch.clamp(torch.linalg.norm(direction), min=1e-12)
    color = light[3:]
    lam = torch.clamp((normal * dhat).sum(dim=-1, keepdim=True), min=0.0)
    return torch.clamp(albedo * (ambient + color * lam), 0.0, 1.0)


def place_in_camera(posed: PosedHand, depth: float,
                    trans: torch.Tensor | None = None) -> PosedHand:
    """Shift a root-anchored hand to its nominal depth in front of the camera."""
    offset = torch.tensor([0.0, 0.0, depth], dtype=DTYPE)
    if trans is not None:
        offset = offset + torch.as_tensor(trans, dtype=DTYPE)
    return posed.translated(offset)


def _bilinear_sample(tex: torch.Tensor, uv: torch.Tensor) -> torch.Tensor:
    """Clamp-to-edge bilinear texture lookup; differentiable in uv and texels."""
    r = tex.shape[0]
    x = torch.clamp(uv[:, 0], 0.0, 1.0) * (r - 1)
    y = torch.clamp(uv[:, 1], 0.0, 1.0) * (r - 1)
    x0 = torch.clamp(x.floor(), 0, r - 2).long()
    y0 = torch.clamp(y.floor(), 0, r - 2).long()
    fx = (x - x0).unsqueeze(1)
    fy = (y - y0).unsqueeze(1)
    t00 = tex[y0, x0]
    t01 = tex[y0, x0 + 1]
    t10 = tex[y0 + 1, x0]
    t11 = tex[y0 + 1, x0 + 1]
    return (t00 * (1 - fx) * (1 - fy) + t01 * fx * (1 - fy)
            + t10 * (1 - fx) * fy + t11 * fx * fy)


_NEXT_VERTEX = torch.tensor([1, 2, 0])
_ARANGE_CACHE = torch.arange(0)


def _cached_arange(n: int) -> torch.Tensor:
    global _ARANGE_CACHE
    if _ARANGE_CACHE.numel() < n:
        _ARANGE_CACHE = torch.arange(max(n, 2 * _ARANGE_CACHE.numel()))
    return _ARANGE_CACHE[:n]


def _soft_coverage_log_miss(signed: torch.Tensor, tau: float, cutoff: float) -> torch.Tensor:
    """log(1 - coverage) per pair, with the sigmoid tail windowed to exactly
    zero at -cutoff*tau so candidates truncated by the bbox band contribute
    nothing (value or gradient)."""
    x = signed / tau
    full = x >= -(cutoff - 2.0)
    # keep the tail branch finite where it is masked out (sigmoid saturation
    # would otherwise make log1p(-1) leak NaN through the where backward)
    x_tail = torch.where(full, torch.full_like(x, -(cutoff - 2.0)), x)
    ramp = torch.clamp((x_tail + cutoff) * 0.5, 0.0, 1.0)
    win = ramp * ramp * (3.0 - 2.0 * ramp)
    tail = torch.log1p(-torch.sigmoid(x_tail) * win)
    return torch.where(full, -F.softplus(x), tail)


def _edge_crosses(tri: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
    """z of cross((b - a), (p - a)) for the three directed edges; [N,3]."""
    e = tri[:, _NEXT_VERTEX] - tri
    wv = p[:, None, :] - tri
    return e[..., 0] * wv[..., 1] - e[..., 1] * wv[..., 0]


def _signed_distance(tri: torch.Tensor, p: torch.Tensor,
                     orient: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Signed pixel-to-triangle distance (positive inside) and the inside mask.

    The unsigned part is the distance to the nearest of the three finite
    edges; the sign comes from the edge crosses against the face orientation.
    """
    e = tri[:, _NEXT_VERTEX] - tri                 # [N,3,2]
    wv = p[:, None, :] - tri                       # [N,3,2]
    cross = e[..., 0] * wv[..., 1] - e[..., 1] * wv[..., 0]
    inside = (cross * orient[:, None] >= 0).all(dim=1)
    denom = torch.clamp((e * e).sum(-1), min=1e-18)
    t = torch.clamp((wv * e).sum(-1) / denom, 0.0, 1.0)
    diff = wv - t.unsqueeze(-1) * e
    d2 = (diff * diff).sum(-1).min(dim=1).values
    dist = torch.sqrt(d2 + 1e-18)
    return torch.where(inside, dist, -dist), inside


def _barycentric(tri: torch.Tensor, p: torch.Tensor) -> torch.Tensor:
    """Clamped screen-space barycentric weights [N,3] (sum to 1, entries >= 0).

    Inside the triangle these are the exact barycentrics; outside they are the
    orientation-corrected crosses clamped at zero, a continuous extension.
    """
    c = _edge_crosses(tri, p)
    # cross of edge i (v_i -> v_{i+1}) is proportional to the weight of v_{i+2}
    lam = torch.stack([c[:, 1], c[:, 2], c[:, 0]], dim=1)
    total = lam.sum(dim=1, keepdim=True)
    lam = torch.clamp(lam * torch.where(total < 0, -1.0, 1.0), min=0.0)
    return lam / torch.clamp(lam.sum(dim=1, keepdim=True), min=1e-12)


def rasterize(mesh: PosedHand, faces: torch.Tensor, uv_coords: torch.Tensor,
              diffuse: torch.Tensor, light: torch.Tensor, cam: CameraIntrinsics,
              settings: SoftSettings | None = None) -> RenderedImage:
    """Render the posed mesh with a UV diffuse texture and directional light.

    Differentiable w.r.t. vertices, normals, texels, and light. Color picks
    the depth-nearest covering triangle per pixel (hard z-test); the soft
    silhouette aggregates sigmoid(signed_distance / tau) over triangles with
    a probabilistic union.
    """
    settings = settings or SoftSettings()
    h, w = cam.height, cam.width
    light = torch.as_tensor(light, dtype=DTYPE)
    verts = mesh.skin_vertices
    normals = mesh.vertex_normals

    empty_rgb = torch.zeros(h, w, 3, dtype=DTYPE)
    empty_sil = torch.zeros(h, w, dtype=DTYPE)
    empty_depth = torch.full((h, w), float("inf"), dtype=DTYPE)

    pts2d = project(verts, cam)
    f2d_all = pts2d[faces]                      # [F,3,2]

    with torch.no_grad():
        p0, p1, p2 = (verts[faces[:, i]] for i in range(3))
        fnorm = torch.cross(p1 - p0, p2 - p0, dim=1)
        facing = (fnorm * (p0 + p1 + p2)).sum(1) < 0
        e1 = f2d_all[:, 1] - f2d_all[:, 0]
        e2 = f2d_all[:, 2] - f2d_all[:, 0]
        area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        keep = facing & (area2.abs() > 1e-12)
    if not bool(keep.any()):
        return RenderedImage(rgb=empty_rgb, silhouette=empty_sil, depth=empty_depth)

    kept = keep.nonzero().squeeze(1)
    f2d = f2d_all[kept]                         # [K,3,2]
    kfaces = faces[kept]                        # [K,3]

    # candidate (face, pixel) pairs from frame-clipped dilated bboxes
    pad = settings.cutoff * settings.tau + 1.0
    with torch.no_grad():
        lo = f2d.min(dim=1).values - pad
        hi = f2d.max(dim=1).values + pad
        inframe = (hi[:, 0] >= 0) & (lo[:, 0] <= w - 1) & (hi[:, 1] >= 0) & (lo[:, 1] <= h - 1)
        x0 = lo[:, 0].ceil().clamp(0, w - 1).long()
        y0 = lo[:, 1].ceil().clamp(0, h - 1).long()
        x1 = hi[:, 0].floor().clamp(0, w - 1).long()
        y1 = hi[:, 1].floor().clamp(0, h - 1).long()
        counts = torch.where(inframe, (x1 - x0 + 1) * (y1 - y0 + 1),
                             torch.zeros_like(x0))
        total = int(counts.sum())
        if total == 0:
            return RenderedImage(rgb=empty_rgb, silhouette=empty_sil, depth=empty_depth)
        starts = torch.cumsum(counts, 0) - counts
        pair_face = torch.repeat_interleave(_cached_arange(counts.numel()), counts)
        offs = _cached_arange(total) - starts[pair_face]
        bw = (x1 - x0 + 1)[pair_face]
        px = x0[pair_face] + offs % bw
        py = y0[pair_face] + offs // bw
        pair_pix = py * w + px
        pair_pt = torch.stack([px, py], dim=1).to(torch.float32)
        orient = torch.sign(area2[kept]).to(torch.float32)[pair_face]

    tri = f2d.to(torch.float32)[pair_face]      # [P,3,2] differentiable gather
    signed, inside = _signed_distance(tri, pair_pt, orient)

    log_miss = _soft_coverage_log_miss(signed, settings.tau, settings.cutoff)
    acc = torch.zeros(h * w, dtype=torch.float32).index_add(0, pair_pix, log_miss)
    sil = (1.0 - torch.exp(acc)).to(DTYPE)

    # hard z-test on per-face minimum depth; (depth, face) packed into one
    # int64 key so a single amin scatter picks the winner deterministically
    big = kept.numel() + 1
    with torch.no_grad():
        zmin = verts[:, 2].detach().to(torch.float32)[kfaces].min(dim=1).values
        zbits = zmin.view(torch.int32).to(torch.int64)  # z > 0: bit order == value order
        in_idx = inside.nonzero().squeeze(1)
        winner = torch.full((h * w,), big, dtype=torch.long)
        if in_idx.numel():
            key = (zbits[pair_face[in_idx]] << 24) | pair_face[in_idx]
            kbuf = torch.full((h * w,), torch.iinfo(torch.int64).max, dtype=torch.int64)
            kbuf = kbuf.scatter_reduce(0, pair_pix[in_idx], key, reduce="amin",
                                       include_self=True)
            hit = kbuf != torch.iinfo(torch.int64).max
            winner = torch.where(hit, kbuf & 0xFFFFFF, winner)
        covered = winner < big

        color_face = winner.clone()
        if settings.color_mode == "band":
            # nearest miss: face with the largest signed distance per pixel,
            # packed as (-distance, face) for one deterministic amin scatter
            out_idx = (~inside).nonzero().squeeze(1)
            if out_idx.numel():
                dbits = (-signed.detach()[out_idx]).view(torch.int32).to(torch.int64)
                nkey = (dbits << 24) | pair_face[out_idx]
                nbuf = torch.full((h * w,), torch.iinfo(torch.int64).max, dtype=torch.int64)
                nbuf = nbuf.scatter_reduce(0, pair_pix[out_idx], nkey, reduce="amin",
                                           include_self=True)
                near_ok = ((~covered) & (nbuf != torch.iinfo(torch.int64).max)
                           & (sil.detach() > settings.sil_floor))
                color_face = torch.where(near_ok, nbuf & 0xFFFFFF, color_face)

        lit = (color_face < big).nonzero().squeeze(1)

    rgb = empty_rgb.reshape(-1, 3)
    depth = empty_depth.reshape(-1)
    if lit.numel():
        cface = color_face[lit]                  # kept-face index per lit pixel
        ctri = f2d[cface]
        cpt = torch.stack([(lit % w).to(DTYPE), (lit // w).to(DTYPE)], dim=1)
        lam = _barycentric(ctri, cpt)
        cuv = (lam.unsqueeze(2) * uv_coords[kfaces[cface]]).sum(1)
        cnrm = (lam.unsqueeze(2) * normals[kfaces[cface]]).sum(1)
        cnrm = cnrm / torch.clamp(torch.linalg.norm(cnrm, dim=1, keepdim=True), min=1e-12)
        albedo = _bilinear_sample(diffuse, cuv)
        shaded = shade_lambertian(albedo, cnrm, light, settings.ambient)
        if settings.color_mode == "band":
            shaded = shaded * sil.reshape(-1)[lit].unsqueeze(1)
        rgb = rgb.index_put((lit,), shaded)
        with torch.no_grad():
            on_pix = lit[covered[lit]]
            if on_pix.numel():
                czn = (lam.detach() * verts[:, 2].detach()[kfaces[cface]]).sum(1)
                depth = depth.index_put((on_pix,), czn[covered[lit]])

    return RenderedImage(
        rgb=rgb.reshape(h, w, 3),
        silhouette=sil.reshape(h, w),
        depth=depth.reshape(h, w),
    )


def save_png(image: torch.Tensor | np.ndarray, path) -> None:
    """8-bit PNG export of an [H,W,3] rgb or [H,W] grayscale float image."""
    arr = image.detach().cpu().numpy() if isinstance(image, torch.Tensor) else np.asarray(image)
    arr = np.clip(arr, 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    mode = "RGB" if data.ndim == 3 else "L"
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def load_png(path) -> np.ndarray:
    """PNG -> float64 array in [0,1] ([H,W,3] for RGB, [H,W] for grayscale)."""
    img = Image.open(path)
    arr = np.asarray(img, dtype=np.float64) / 255.0
    if arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    return arr


def save_raw(image: torch.Tensor | np.ndarray, path) -> None:
    """Exact float32 dump (same block style as the asset container)."""
    arr = image.detach().cpu().numpy() if isinstance(image, torch.Tensor) else np.asarray(image)
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    shape = " ".join(str(s) for s in arr.shape)
    with open(path, "wb") as fh:
        fh.write(f"handfit-raw 1\nshape {shape}\nend\n".encode("ascii"))
        fh.write(arr.astype("<f4").tobytes())


def load_raw(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    head_end = data.find(b"end\n")
    if head_end < 0 or not data.startswith(b"handfit-raw 1\n"):
        raise ValueError("not a raw float dump")
    shape_line = data[:head_end].decode("ascii").splitlines()[1]
    shape = tuple(int(s) for s in shape_line.split()[1:])
    count = int(np.prod(shape))
    raw = data[head_end + 4: head_end + 4 + count * 4]
    if len(raw) != count * 4:
        raise ValueError("raw float dump truncated")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
