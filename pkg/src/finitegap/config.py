"""Numerical settings shared by the library and the CLI."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import InputError


@dataclass(frozen=True)
class Settings:
    """Tunable parameters; every library entry point accepts ``settings=``.

    Attributes
    ----------
    n_steps : int
        Integration steps per period.
    lambda_stencil_h : float
        Relative step of the five-point lambda stencil, scaled by 1 + |lambda|.
    root_window : float or None
        Half-width of the search window around 2 pi k / T; None means pi / T.
    order_radius, order_nodes, order_tol
        Contour radius, node count and relative noise floor for order detection.
    K_margin : int
        Extra modes carried by Newton beyond the truncation index.
    skip_tol : float
        The pipeline skips Newton when the undressed potential already meets
        its targets to this accuracy (dressing round-off sits near 1e-10).
    """

    n_steps: int = 1024
    lambda_stencil_h: float = 1e-4
    root_window: float | None = None
    root_tol: float = 1e-12
    order_radius: float = 1e-2
    order_nodes: int = 64
    order_tol: float = 1e-5
    K_margin: int = 8
    newton_tol: float = 1e-10
    skip_tol: float = 1e-8
    max_iter: int = 30
    fd_step: float = 1e-7
    sign_policy: str = "nearest"
    closure_tol: float = 1e-7
    eigen_cond_tol: float = 1e-6
    direction_sigma_min: float = 1e-6
    threads: int = 1

    def __post_init__(self):
        if self.n_steps < 8:
            raise InputError("n_steps must be at least 8")
        if self.threads < 1:
            raise InputError("threads must be positive")
        if self.sign_policy not in ("nearest", "plus", "minus"):
            raise InputError(f"unknown sign_policy {self.sign_policy!r}")

    def updated(self, **changes) -> "Settings":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data) -> "Settings":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known - {"n"}
        if extra:
            raise InputError(f"unknown config keys: {sorted(extra)}")
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def from_file(cls, path) -> "Settings":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = Settings()


def resolve(settings) -> Settings:
    return DEFAULT if settings is None else settings
