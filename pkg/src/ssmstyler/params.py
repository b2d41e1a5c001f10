"""Named parameter arrays with paired gradients, plus the text checkpoint format."""

from __future__ import annotations

import numpy as np

from .errors import CorruptCheckpoint, InvalidConfig

CHECKPOINT_HEADER = "ssmstyler-ckpt v1"


class ParamStore:
    """Ordered map name -> (value array, gradient array of the same shape)."""

    def __init__(self):
        self._values: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self._values:
            raise InvalidConfig(f"duplicate parameter name {name!r}")
        value = np.asarray(value, dtype=np.float64)
        self._values[name] = value
        self._grads[name] = np.zeros_like(value)

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._values[name]
        except KeyError:
            raise CorruptCheckpoint(f"missing parameter {name!r}") from None

    def set_value(self, name: str, value: np.ndarray) -> None:
        old = self[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != old.shape:
            raise CorruptCheckpoint(
                f"shape mismatch for {name!r}: {value.shape} != {old.shape}"
            )
        self._values[name] = value

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def set_grad(self, name: str, grad: np.ndarray) -> None:
        if grad.shape != self._values[name].shape:
            raise InvalidConfig(f"gradient shape mismatch for {name!r}")
        self._grads[name] = np.asarray(grad, dtype=np.float64)

    def zero_grads(self) -> None:
        for name in self._grads:
            self._grads[name] = np.zeros_like(self._values[name])

    def names(self) -> list[str]:
        return list(self._values)

    def total_size(self) -> int:
        return sum(v.size for v in self._values.values())

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self._values.values())

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, value in self._values.items():
            out.add(name, value.copy())
            out._grads[name] = self._grads[name].copy()
        return out

    # -- checkpoint format: portable text, 17 significant digits ------------

    def save(self, path) -> None:
        lines = [CHECKPOINT_HEADER]
        for name, value in self._values.items():
            dims = " ".join(str(d) for d in value.shape)
            lines.append(f"{name} {value.ndim}{' ' + dims if dims else ''}")
            lines.append(" ".join(f"{x:.17g}" for x in value.ravel()))
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "ParamStore":
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != CHECKPOINT_HEADER:
            raise CorruptCheckpoint(f"{path}: unknown checkpoint version or header")
        store = cls()
        i = 1
        while i < len(lines):
            if not lines[i].strip():
                i += 1
                continue
            head = lines[i].split()
            if len(head) < 2:
                raise CorruptCheckpoint(f"{path}: malformed parameter header {lines[i]!r}")
            name, ndim = head[0], int(head[1])
            if len(head) != 2 + ndim:
                raise CorruptCheckpoint(f"{path}: bad dimension list for {name!r}")
            shape = tuple(int(d) for d in head[2:])
            i += 1
            if i >= len(lines):
                raise CorruptCheckpoint(f"{path}: missing values for {name!r}")
            flat = np.array([float(x) for x in lines[i].split()])
            expected = int(np.prod(shape)) if shape else 1
            if flat.size != expected:
                raise CorruptCheckpoint(f"{path}: value count mismatch for {name!r}")
            store.add(name, flat.reshape(shape))
            i += 1
        return store
