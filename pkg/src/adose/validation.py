"""Input validation helpers for the array-based estimator API."""

from __future__ import annotations

import numpy as np


def check_matrix(X, name: str = "X") -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError(f"{name} has no rows")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_labels(y, n_rows: int, allow_unlabeled: bool = False) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_rows,):
        raise ValueError(f"y must have shape ({n_rows},), got {y.shape}")
    allowed = (-1, 0, 1) if allow_unlabeled else (0, 1)
    if not np.isin(y, allowed).all():
        raise ValueError(f"labels must be in {allowed}")
    return y.astype(int)


def check_domains(domain, n_rows: int) -> np.ndarray:
    domain = np.asarray(domain)
    if domain.shape != (n_rows,):
        raise ValueError(f"domain must have shape ({n_rows},), got {domain.shape}")
    if domain.min() < 0:
        raise ValueError("domain ids must be nonnegative")
    return domain.astype(int)


def split_views(X: np.ndarray, text_dim: int, visual_dim: int, hv_dim: int):
    """Split stacked columns [text | visual | hv] back into views."""
    expected = text_dim + visual_dim + hv_dim
    if X.shape[1] != expected:
        raise ValueError(
            f"X has {X.shape[1]} columns, expected text({text_dim}) + "
            f"visual({visual_dim}) + hv({hv_dim}) = {expected}"
        )
    text = X[:, :text_dim]
    visual = X[:, text_dim : text_dim + visual_dim]
    hv = X[:, text_dim + visual_dim :] if hv_dim else None
    return text, visual, hv


def stack_views(text, visual, hv=None) -> np.ndarray:
    """Concatenate view matrices into one estimator input."""
    parts = [np.asarray(text, dtype=np.float64), np.asarray(visual, dtype=np.float64)]
    if hv is not None:
        parts.append(np.asarray(hv, dtype=np.float64))
    return np.concatenate(parts, axis=1)
