"""
Utilitários geométricos 2D: ângulos, transformações de quadro e polilinhas.
"""

import math
from dataclasses import dataclass, field

import numpy as np


def wrap_angle(angle: float) -> float:
    """
    Normaliza um ângulo para o intervalo (-π, π].

    Args:
        angle: Ângulo em radianos

    Returns:
        Ângulo equivalente em (-π, π]
    """
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def wrap_angles(angles: np.ndarray) -> np.ndarray:
    """Versão vetorizada de wrap_angle"""
    wrapped = np.fmod(angles + np.pi, 2.0 * np.pi)
    wrapped = np.where(wrapped <= 0.0, wrapped + 2.0 * np.pi, wrapped)
    return wrapped - np.pi


def to_local(dx: float, dy: float, heading: float) -> tuple[float, float]:
    """Rotaciona um deslocamento global para o quadro de um pose com o heading dado"""
    c, s = math.cos(heading), math.sin(heading)
    return c * dx + s * dy, -s * dx + c * dy


def rotate(x: float, y: float, angle: float) -> tuple[float, float]:
    """Rotaciona um ponto em torno da origem"""
    c, s = math.cos(angle), math.sin(angle)
    return c * x - s * y, s * x + c * y


def rectangle_corners(x: float, y: float, heading: float, half_length: float, half_width: float) -> np.ndarray:
    """
    Retorna os 4 cantos (4x2) de um retângulo orientado, em ordem anti-horária.
    """
    c, s = math.cos(heading), math.sin(heading)
    ux, uy = c * half_length, s * half_length
    vx, vy = -s * half_width, c * half_width
    return np.array(
        [
            [x + ux + vx, y + uy + vy],
            [x - ux + vx, y - uy + vy],
            [x - ux - vx, y - uy - vy],
            [x + ux - vx, y + uy - vy],
        ]
    )


def point_segment_distances(points: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """
    Distâncias entre P pontos e S segmentos (matriz PxS).

    Args:
        points: (P, 2)
        starts: (S, 2) início de cada segmento
        ends: (S, 2) fim de cada segmento
    """
    seg = ends - starts
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    rel = points[:, None, :] - starts[None, :, :]
    safe_len2 = np.where(seg_len2 > 0.0, seg_len2, 1.0)
    t = np.einsum("psk,sk->ps", rel, seg) / safe_len2[None, :]
    t = np.clip(np.where(seg_len2[None, :] > 0.0, t, 0.0), 0.0, 1.0)
    closest = starts[None, :, :] + t[..., None] * seg[None, :, :]
    return np.linalg.norm(points[:, None, :] - closest, axis=-1)


@dataclass(frozen=True)
class Projection:
    """Resultado da projeção de um ponto numa polilinha"""

    arc_length: float
    lateral: float  # positivo à esquerda do sentido da polilinha
    tangent_heading: float


@dataclass
class Polyline:
    """Polilinha com comprimento de arco acumulado (centerline de rota ou de faixa)"""

    points: np.ndarray
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        # Remove pontos duplicados consecutivos (junções entre nós)
        keep = np.ones(len(pts), dtype=bool)
        if len(pts) > 1:
            keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-9
        self.points = pts[keep]
        if len(self.points) < 2:
            raise ValueError("Polilinha precisa de pelo menos 2 pontos distintos")
        seg_lengths = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        self.cumulative = np.concatenate([[0.0], np.cumsum(seg_lengths)])

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    def project(self, x: float, y: float) -> Projection:
        """Projeta (x, y) no segmento mais próximo da polilinha"""
        starts, ends = self.points[:-1], self.points[1:]
        dists = point_segment_distances(np.array([[x, y]]), starts, ends)[0]
        idx = int(np.argmin(dists))
        seg = ends[idx] - starts[idx]
        seg_len = float(np.hypot(seg[0], seg[1]))
        rel = np.array([x, y]) - starts[idx]
        t = min(max(float(rel @ seg) / (seg_len * seg_len), 0.0), 1.0)
        tangent = math.atan2(seg[1], seg[0])
        lateral = (seg[0] * rel[1] - seg[1] * rel[0]) / seg_len
        return Projection(
            arc_length=float(self.cumulative[idx]) + t * seg_len,
            lateral=float(lateral),
            tangent_heading=tangent,
        )

    def tangent_at(self, arc_length: float, half_span: float = 1.0) -> float:
        """
        Direção da corda centrada em arc_length (s ± half_span). Em arcos circulares
        coincide com a tangente; nos vértices suaviza o salto entre segmentos.
        """
        ax, ay = self.point_at(arc_length - half_span)
        bx, by = self.point_at(arc_length + half_span)
        if math.hypot(bx - ax, by - ay) < 1e-9:
            seg = self.points[-1] - self.points[-2]
            return math.atan2(seg[1], seg[0])
        return math.atan2(by - ay, bx - ax)

    def point_at(self, arc_length: float) -> tuple[float, float]:
        """Ponto da polilinha no comprimento de arco dado (saturado nas pontas)"""
        s = min(max(arc_length, 0.0), self.length)
        idx = int(np.searchsorted(self.cumulative, s, side="right")) - 1
        idx = min(max(idx, 0), len(self.points) - 2)
        seg_len = self.cumulative[idx + 1] - self.cumulative[idx]
        t = (s - self.cumulative[idx]) / seg_len if seg_len > 0 else 0.0
        p = self.points[idx] + t * (self.points[idx + 1] - self.points[idx])
        return float(p[0]), float(p[1])
