"""Forward model: (beta, theta) -> posed skin mesh, marker vertices, 21 keypoints.

Everything here is differentiable torch code; gradients flow to the shape and
pose coefficients through blendshapes, Rodrigues rotations, and linear blend
skinning.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .hand_model import DTYPE, HandModelAssets


@dataclass
class PosedHand:
    skin_vertices: torch.Tensor    # [V,3]
    vertex_normals: torch.Tensor   # [V,3] unit
    mano_vertices: torch.Tensor    # [VM,3]
    joints3d: torch.Tensor         # [21,3]

    def translated(self, offset: torch.Tensor) -> "PosedHand":
        return PosedHand(
            skin_vertices=self.skin_vertices + offset,
            vertex_normals=self.vertex_normals,
            mano_vertices=self.mano_vertices + offset,
            joints3d=self.joints3d + offset,
        )


def shape_offset(assets: HandModelAssets, beta: torch.Tensor) -> torch.Tensor:
    """Template plus the linear shape blendshape: template + sum_k beta_k B_k."""
    beta = torch.as_tensor(beta, dtype=DTYPE)
    return assets.template_vertices + torch.einsum("k,kvc->vc", beta, assets.shape_basis)


def rodrigues(axis_angle: torch.Tensor) -> torch.Tensor:
    """Rotation matrices for a batch of axis-angle vectors [N,3] -> [N,3,3].

    Below 1e-6 radians the sin/cos coefficients switch to their series in
    angle^2, keeping gradients finite at exactly zero rotation.
    """
    aa = torch.as_tensor(axis_angle, dtype=DTYPE)
    single = aa.dim() == 1
    if single:
        aa = aa[None]
    sq = (aa * aa).sum(dim=1)
    small = sq < 1e-12
    sq_safe = torch.where(small, torch.ones_like(sq), sq)
    angle = torch.sqrt(sq_safe)
    c1 = torch.where(small, 1.0 - sq / 6.0 + sq * sq / 120.0, torch.sin(angle) / angle)
    c2 = torch.where(small, 0.5 - sq / 24.0 + sq * sq / 720.0, (1.0 - torch.cos(angle)) / sq_safe)
    zeros = torch.zeros_like(sq)
    kx, ky, kz = aa[:, 0], aa[:, 1], aa[:, 2]
    k = torch.stack(
        [zeros, -kz, ky, kz, zeros, -kx, -ky, kx, zeros], dim=1
    ).reshape(-1, 3, 3)
    eye = torch.eye(3, dtype=DTYPE).expand(aa.shape[0], 3, 3)
    rot = eye + c1[:, None, None] * k + c2[:, None, None] * (k @ k)
    return rot[0] if single else rot


def pose_rotations(assets: HandModelAssets, theta: torch.Tensor) -> torch.Tensor:
    """Per-joint rotation matrices [J,3,3] from pose coefficients."""
    theta = torch.as_tensor(theta, dtype=DTYPE)
    axis_angle = torch.einsum("k,kjc->jc", theta, assets.pose_basis)
    return rodrigues(axis_angle)


def lbs_pose(
    assets: HandModelAssets,
    shaped_vertices: torch.Tensor,
    rotations: torch.Tensor,
) -> torch.Tensor:
    """Standard linear blend skinning with rest-pose correction.

    Rest joints come from the joint regressor applied to the shaped vertices;
    each joint rotates about its rest position and global transforms compose
    down the kinematic tree.
    """
    rest_joints = assets.joint_regressor @ shaped_vertices  # [J,3]
    parents = assets.joint_tree.tolist()
    j = len(parents)

    # Global transforms in displacement form: disp_j = glob_pos_j - rest_j.
    # At identity rotations every term below is exactly zero, so the identity
    # pose reproduces the shaped vertices bit for bit.
    glob_rot: list[torch.Tensor] = [None] * j
    disp: list[torch.Tensor] = [None] * j
    for i in range(j):
        p = parents[i]
        if p < 0:
            glob_rot[i] = rotations[i]
            disp[i] = torch.zeros(3, dtype=shaped_vertices.dtype)
        else:
            glob_rot[i] = glob_rot[p] @ rotations[i]
            bone = rest_joints[i] - rest_joints[p]
            disp[i] = glob_rot[p] @ bone - bone + disp[p]
    rot = torch.stack(glob_rot)                     # [J,3,3]
    dsp = torch.stack(disp)                         # [J,3]

    # per-joint displacement of every vertex (rigid image minus the vertex)
    local = shaped_vertices[None, :, :] - rest_joints[:, None, :]        # [J,V,3]
    delta = torch.einsum("jab,jvb->jva", rot, local) - local + dsp[:, None, :]
    return shaped_vertices + torch.einsum("vj,jvc->vc", assets.skinning_weights, delta)


def vertex_normals(vertices: torch.Tensor, faces: torch.Tensor) -> torch.Tensor:
    """Unit normals from area-weighted face-normal accumulation."""
    p0 = vertices[faces[:, 0]]
    p1 = vertices[faces[:, 1]]
    p2 = vertices[faces[:, 2]]
    fn = torch.cross(p1 - p0, p2 - p0, dim=1)  # length = 2x area
    acc = torch.zeros_like(vertices)
    for k in range(3):
        acc = acc.index_add(0, faces[:, k], fn)
    norm = torch.linalg.norm(acc, dim=1, keepdim=True)
    return acc / torch.clamp(norm, min=1e-12)


def forward(assets: HandModelAssets, beta: torch.Tensor, theta: torch.Tensor) -> PosedHand:
    """Full forward pass: blendshapes, pose, skinning, marker and keypoint regression."""
    shaped = shape_offset(assets, beta)
    rotations = pose_rotations(assets, theta)
    skin = lbs_pose(assets, shaped, rotations)
    normals = vertex_normals(skin, assets.faces)
    mano = assets.mano_vertex_regressor @ skin
    joints = assets.mano_joint_regressor @ mano
    return PosedHand(skin_vertices=skin, vertex_normals=normals,
                     mano_vertices=mano, joints3d=joints)


def export_obj(posed: PosedHand, assets: HandModelAssets, path) -> None:
    """Write the posed skin mesh as a Wavefront OBJ (v/vt/f lines)."""
    verts = posed.skin_vertices.detach().cpu().numpy()
    uvs = assets.uv_coords.detach().cpu().numpy()
    faces = assets.faces.detach().cpu().numpy()
    with open(path, "w", encoding="ascii") as fh:
        for x, y, z in verts:
            fh.write(f"v {x:.8f} {y:.8f} {z:.8f}\n")
        for u, v in uvs:
            fh.write(f"vt {u:.8f} {v:.8f}\n")
        for a, b, c in faces + 1:
            fh.write(f"f {a}/{a} {b}/{b} {c}/{c}\n")
