"""Adapting sketched values with the mapping frozen.

The task is teacher-student regression on a single linear map:
``L = 0.5 * ||W_hat X - Y||_F^2`` with ``Y = teacher @ X``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import ShapeError, as_matrix
from .runtime import SketchedMatrix, forward, grad_sketched, reconstruct


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int, loss: float):
        self.step = step
        super().__init__(f"non-finite loss {loss} at step {step}")


@dataclass
class TrainTask:
    teacher: np.ndarray
    inputs: np.ndarray
    targets: np.ndarray = None

    def __post_init__(self):
        self.teacher = as_matrix(self.teacher, "teacher")
        self.inputs = as_matrix(self.inputs, "inputs")
        if self.teacher.shape[1] != self.inputs.shape[0]:
            raise ShapeError(f"teacher {self.teacher.shape} does not match inputs {self.inputs.shape}")
        if self.targets is None:
            self.targets = self.teacher @ self.inputs


@dataclass
class OptimState:
    """SGD or Adam state for the sketched values."""

    lr: float = 1e-2
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if not self.lr > 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")

    def update(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.step += 1
        if self.optimizer == "sgd":
            return params - self.lr * grad
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        if self.m.shape != params.shape:
            raise ShapeError(f"optimizer moments {self.m.shape} do not match parameters {params.shape}")
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad ** 2
        m_hat = self.m / (1 - self.beta1 ** self.step)
        v_hat = self.v / (1 - self.beta2 ** self.step)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def loss_and_grad(sm: SketchedMatrix, task: TrainTask, threads: int | None = 1):
    residual = forward(sm, task.inputs, threads) - task.targets
    with np.errstate(over="ignore", invalid="ignore"):
        loss = 0.5 * float(np.sum(residual ** 2))
    return loss, grad_sketched(sm, residual @ task.inputs.T, threads)


def train(sm: SketchedMatrix, task: TrainTask, opt: OptimState, steps: int, threads: int | None = 1):
    """Run ``steps`` optimizer updates on the sketched values only.

    Returns:
        ``(trained, losses)`` where ``losses[t]`` is the loss before update
        ``t`` and ``losses[steps]`` the loss after the last update.

    Raises:
        TrainingDivergedError: when the loss stops being finite.
    """
    if task.teacher.shape != (sm.rows, sm.cols):
        raise ShapeError(f"teacher {task.teacher.shape} does not match sketch {(sm.rows, sm.cols)}")
    frozen = sm.indices.copy()
    current = sm
    losses = []
    for step in range(steps + 1):
        loss, grad = loss_and_grad(current, task, threads)
        if not np.isfinite(loss):
            raise TrainingDivergedError(step, loss)
        losses.append(loss)
        if step == steps:
            break
        current = current.with_sketched(opt.update(current.sketched, grad))
    assert np.array_equal(current.indices, frozen)
    return current, losses


def delta_realized(before: SketchedMatrix, after: SketchedMatrix) -> np.ndarray:
    """Weight update actually achieved: ``reconstruct(after) - reconstruct(before)``."""
    if before.indices.shape != after.indices.shape or not np.array_equal(before.indices, after.indices):
        raise ValueError("sketches use different mappings; the realized update is undefined")
    if before.gpr != after.gpr or before.bits != after.bits:
        raise ValueError("sketches have different group layouts")
    return reconstruct(after) - reconstruct(before)
