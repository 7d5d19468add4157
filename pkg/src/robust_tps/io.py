"""Model files and CSV datasets.

A model file is a plain-text ``key = value`` document. Arrays are written
as whitespace-separated numbers with 17 significant digits so that a
write/read cycle reproduces every coefficient exactly::

    # robust_tps model
    format = 1
    m = 2
    d = 2
    n = 3
    lambda = 0.001
    loss.family = huber
    ...
    centers = 0 0 1 0 0 1
    gamma = ...
    delta = ...
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .design import Dataset
from .loss import LossSpec
from .solver import TpsModel

FORMAT_VERSION = 1


class ParseError(ValueError):
    """Malformed CSV or model file."""


def _num(x: float) -> str:
    return f"{x:.17g}"


def _vec(a) -> str:
    return " ".join(_num(v) for v in np.asarray(a, dtype=float).ravel())


def dumps_model(model: TpsModel) -> str:
    loss = model.loss
    lines = [
        "# robust_tps model",
        f"format = {FORMAT_VERSION}",
        f"m = {model.m}",
        f"d = {model.d}",
        f"n = {model.n}",
        f"lambda = {_num(model.lam)}",
        f"loss.family = {loss.family}",
        f"loss.huber_c = {_num(loss.huber_c)}",
        f"loss.quantile_alpha = {_num(loss.quantile_alpha)}",
        f"loss.lad_epsilon = {_num(loss.lad_epsilon)}",
        f"iterations = {model.iterations}",
        f"converged = {str(bool(model.converged)).lower()}",
        f"sigma_hat = {'none' if model.sigma_hat is None else _num(model.sigma_hat)}",
        f"centers = {_vec(model.centers)}",
        f"gamma = {_vec(model.gamma)}",
        f"delta = {_vec(model.delta)}",
    ]
    if model.hat_diag is not None:
        lines.append(f"hat_diag = {_vec(model.hat_diag)}")
    if model.final_residuals is not None:
        lines.append(f"residuals = {_vec(model.final_residuals)}")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> TpsModel:
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"model line {lineno}: expected 'key = value'")
        kv[key.strip()] = value.strip()

    def get(key):
        try:
            return kv[key]
        except KeyError:
            raise ParseError(f"model file lacks {key!r}") from None

    def arr(key, optional=False):
        if optional and key not in kv:
            return None
        s = get(key)
        return np.array([float(t) for t in s.split()]) if s else np.zeros(0)

    try:
        if int(get("format")) != FORMAT_VERSION:
            raise ParseError(f"unsupported model format {kv['format']}")
        m, d, n = int(get("m")), int(get("d")), int(get("n"))
        centers = arr("centers").reshape(n, d)
        sigma = get("sigma_hat")
        loss = LossSpec(get("loss.family"), huber_c=float(get("loss.huber_c")),
                        quantile_alpha=float(get("loss.quantile_alpha")),
                        lad_epsilon=float(get("loss.lad_epsilon")))
        model = TpsModel(
            m=m, d=d, centers=centers, gamma=arr("gamma"), delta=arr("delta"),
            lam=float(get("lambda")), loss=loss, iterations=int(get("iterations")),
            converged=get("converged") == "true",
            hat_diag=arr("hat_diag", optional=True),
            final_residuals=arr("residuals", optional=True),
            sigma_hat=None if sigma == "none" else float(sigma))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"bad model file: {exc}") from exc
    if model.gamma.size != n or model.delta.size != model.basis.M:
        raise ParseError("coefficient lengths do not match n and M")
    return model


def save_model(model: TpsModel, path) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path) -> TpsModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))


def read_table(path, response: Optional[str] = "y") -> tuple[list[str], np.ndarray, Optional[np.ndarray]]:
    """Read a headed numeric CSV.

    Returns the predictor column names, the predictor matrix and the
    response vector (``None`` when ``response`` is ``None`` or absent and
    not required).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response is not None and response not in header:
        raise ParseError(f"{path}: no response column {response!r} in header {header}")
    values = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            raise ParseError(f"{path}: row {lineno} is not numeric: {row}") from None
    if not values:
        raise ParseError(f"{path}: no data rows")
    table = np.array(values)
    if not np.all(np.isfinite(table)):
        raise ParseError(f"{path}: non-finite values")
    pcols = [i for i, h in enumerate(header) if h != response]
    y = table[:, header.index(response)] if response is not None else None
    return [header[i] for i in pcols], table[:, pcols], y


def read_dataset(path, response: str = "y") -> tuple[list[str], Dataset]:
    names, x, y = read_table(path, response)
    if not names:
        raise ParseError(f"{path}: no predictor columns")
    return names, Dataset(x, y)
