"""
Recovery Stage: weights from mixed labels, and images from the mix system.

Solvers:
- ``abs_mean_baseline``: per-set mean of abs(encodings).
- ``solve_least_squares``: box-constrained min ||B - M A||^2 for data released
  without sign flipping.
- ``solve_abs_gd``: projected gradient descent on ||sigma(A)||^2 where each
  entry of sigma takes the smaller-magnitude branch of +-abs(B) - M abs(A).
- ``single_encoding_attack``: strip public images from one de-masked
  encoding by repeated best-SSIM subtraction.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import torch
from langchain_core.messages import AIMessage
import logging as log

from core.errors import ConfigError, LabelError, RecoveryError, ShapeError
from core.types import ZERO_TOL, EncodedDataset, EncodedImage
from stages.attack_config import GdConfig
from stages.base import pipeline_stage
from tools.metrics import ssim_matrix
from utils import DEVICE, DTYPE

RIDGE = 1e-8
ROW_SUM_TOL = 1e-9


@dataclass
class LambdaRecovery:
    lambdas: Tuple[float, float]
    classes: Tuple[int, int]


def recover_lambdas(z) -> LambdaRecovery:
    """The two private weights and their classes, read off a mixed label."""
    z = np.asarray(z, dtype=np.float64)
    nonzero = np.flatnonzero(z > ZERO_TOL)
    if len(nonzero) == 0:
        raise LabelError("mixed label has no mass")
    if len(nonzero) > 2:
        raise LabelError(f"mixed label has {len(nonzero)} nonzero entries; InstaHide mixes two private labels")
    if len(nonzero) == 1:
        c = int(nonzero[0])
        half = float(z[c]) / 2.0
        return LambdaRecovery((half, half), (c, c))
    a, b = (int(c) for c in nonzero)
    return LambdaRecovery((float(z[a]), float(z[b])), (a, b))


@dataclass
class MixSystem:
    """M: sparse |E| x |X| weights, B: |E| x d pixels, box: solver bounds."""

    M: sp.csr_matrix
    B: np.ndarray
    box: Tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        self.M = sp.csr_matrix(self.M, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        if self.M.shape[0] != self.B.shape[0]:
            raise ShapeError(f"M has {self.M.shape[0]} rows, B has {self.B.shape[0]}")
        nnz = np.diff(self.M.indptr)
        if (nnz != 2).any():
            raise ConfigError("every row of M needs exactly two nonzero weights")
        if (np.asarray(self.M.sum(axis=1)).ravel() > 1.0 + ROW_SUM_TOL).any():
            raise ConfigError("row sums of M must not exceed 1")

    @property
    def num_sources(self) -> int:
        return self.M.shape[1]


def build_mix_system(pairs: np.ndarray, lambdas: np.ndarray, B: np.ndarray, num_sources: int,
                     box: Tuple[float, float] = (0.0, 1.0)) -> MixSystem:
    rows = np.repeat(np.arange(len(pairs)), 2)
    M = sp.csr_matrix((np.asarray(lambdas, dtype=np.float64).ravel(), (rows, np.asarray(pairs).ravel())),
                      shape=(len(pairs), num_sources))
    return MixSystem(M, B, box)


@dataclass
class ReconstructionResult:
    images: np.ndarray
    method: str
    objective_trace: List[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")


def abs_mean_baseline(cliques: Sequence[Sequence[int]], encodings, box: Tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """Pixel-wise mean of abs(e) over each clique, clamped to the box."""
    if isinstance(encodings, EncodedDataset):
        flat, shape = encodings.flat(), encodings.params.shape
    else:
        flat, shape = np.asarray(encodings, dtype=np.float64), None
    out = np.empty((len(cliques), flat.shape[1]), dtype=np.float64)
    for s, members in enumerate(cliques):
        members = np.asarray(members, dtype=np.int64)
        if len(members) == 0:
            raise RecoveryError(f"clique {s} is empty")
        out[s] = np.abs(flat[members]).mean(axis=0)
    np.clip(out, box[0], box[1], out=out)
    return out if shape is None else out.reshape(len(cliques), *shape)


def mix_objective(sys: MixSystem, A: np.ndarray) -> float:
    """||B - M A||^2 for a flat (|X|, d) candidate."""
    r = sys.B - sys.M @ np.asarray(A, dtype=np.float64)
    return float(np.sum(r * r))


def _batched_cg(G: np.ndarray, R: np.ndarray, iters: int, tol: float = 1e-14) -> np.ndarray:
    """Solve G X = R for every column of R at once (G symmetric positive definite)."""
    X = np.zeros_like(R)
    res = R.copy()
    direction = res.copy()
    rs = np.sum(res * res, axis=0)
    for _ in range(iters):
        if np.all(rs <= tol * tol):
            break
        Gd = G @ direction
        denom = np.sum(direction * Gd, axis=0)
        alpha = np.divide(rs, denom, out=np.zeros_like(rs), where=denom > 0)
        X += alpha * direction
        res -= alpha * Gd
        rs_new = np.sum(res * res, axis=0)
        beta = np.divide(rs_new, rs, out=np.zeros_like(rs), where=rs > 0)
        direction = res + beta * direction
        rs = rs_new
    return X


def solve_least_squares(sys: MixSystem, max_refine: int = 500, shape: Optional[Tuple[int, ...]] = None) -> ReconstructionResult:
    """Box-constrained least squares for sign-free data."""
    MtM = (sys.M.T @ sys.M).toarray()
    n = MtM.shape[0]
    rank = np.linalg.matrix_rank(MtM)
    if rank < n:
        log.warning(f"Mix matrix is rank deficient ({rank} < {n}); pairing graph is disconnected, "
                    "returning the ridge-regularized solution")
    G = MtM + RIDGE * np.eye(n)
    MtB = np.asarray(sys.M.T @ sys.B)

    A = _batched_cg(G, MtB, iters=4 * n)
    lo, hi = sys.box
    trace = [mix_objective(sys, A)]
    A = np.clip(A, lo, hi)
    trace.append(mix_objective(sys, A))

    # projected gradient on 0.5 x^T G x - x^T MtB, step 1/L
    step = 1.0 / max(np.linalg.eigvalsh(G)[-1], 1e-12)
    for _ in range(max_refine):
        nxt = np.clip(A - step * (G @ A - MtB), lo, hi)
        moved = np.max(np.abs(nxt - A)) if nxt.size else 0.0
        A = nxt
        if moved < 1e-12:
            break
    trace.append(mix_objective(sys, A))
    log.info(f"Least squares: residual {trace[-1]:.6g}")
    images = A if shape is None else A.reshape(n, *shape)
    return ReconstructionResult(images, "least_squares", trace)


def _positive_sign(A: torch.Tensor) -> torch.Tensor:
    return torch.where(A >= 0, torch.ones_like(A), -torch.ones_like(A))


def greedy_sigma(M: torch.Tensor, absB: torch.Tensor, A: torch.Tensor) -> torch.Tensor:
    """Per entry, the smaller-magnitude of +abs(B) - M abs(A) and -abs(B) - M abs(A)."""
    R = M @ torch.abs(A)
    plus = absB - R
    minus = -absB - R
    return torch.where(plus.abs() <= minus.abs(), plus, minus)


def abs_objective(M: torch.Tensor, absB: torch.Tensor, A: torch.Tensor, l1: bool = False) -> torch.Tensor:
    sigma = greedy_sigma(M, absB, A)
    return sigma.abs().sum() if l1 else (sigma * sigma).sum()


def abs_objective_grad(M: torch.Tensor, absB: torch.Tensor, A: torch.Tensor, l1: bool = False) -> torch.Tensor:
    """Gradient with the sigma branches frozen at A."""
    sigma = greedy_sigma(M, absB, A)
    outer = torch.sign(sigma) if l1 else 2.0 * sigma
    return -(M.T @ outer) * _positive_sign(A)


def solve_abs_gd(sys: MixSystem, init: np.ndarray, cfg: Optional[GdConfig] = None,
                 shape: Optional[Tuple[int, ...]] = None) -> ReconstructionResult:
    """Projected gradient descent on the greedy-sigma objective, warm started at ``init``."""
    cfg = cfg or GdConfig()
    lo, hi = sys.box
    M = torch.as_tensor(sys.M.toarray(), dtype=DTYPE, device=DEVICE)
    absB = torch.as_tensor(np.abs(sys.B), dtype=DTYPE, device=DEVICE)
    A = torch.as_tensor(np.asarray(init, dtype=np.float64).reshape(sys.num_sources, -1),
                        dtype=DTYPE, device=DEVICE).clamp(lo, hi)

    obj = float(abs_objective(M, absB, A, cfg.l1))
    trace = [obj]
    step = cfg.step
    for t in range(cfg.max_steps):
        if not np.isfinite(obj):
            raise RecoveryError(f"objective became {obj} at step {t}")
        if obj == 0.0:
            break
        step = min(step, cfg.step * 0.5 ** (t // cfg.halve_every))
        grad = abs_objective_grad(M, absB, A, cfg.l1)
        accepted = False
        for _ in range(cfg.max_backtracks + 1):
            cand = (A - step * grad).clamp(lo, hi)
            cand_obj = float(abs_objective(M, absB, cand, cfg.l1))
            if np.isnan(cand_obj):
                raise RecoveryError(f"objective became NaN at step {t}")
            if cand_obj <= obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            log.info(f"Gradient descent: no descending step at iteration {t}, stopping")
            break
        A, obj = cand, cand_obj
        trace.append(obj)
        if len(trace) > cfg.window:
            before = trace[-1 - cfg.window]
            if before <= 0 or (before - obj) / before < cfg.rel_tol:
                break

    log.info(f"Gradient descent: {len(trace) - 1} steps, objective {trace[0]:.6g} -> {trace[-1]:.6g}")
    images = A.cpu().numpy()
    if shape is not None:
        images = images.reshape(sys.num_sources, *shape)
    return ReconstructionResult(images, "abs_gd_l1" if cfg.l1 else "abs_gd", trace)


@dataclass
class SingleEncodingResult:
    image: np.ndarray
    public_indices: List[int]


def truth_sign_oracle(sigma: np.ndarray) -> Callable[[EncodedImage], np.ndarray]:
    """De-masks with a known sign vector."""
    def demask(e: EncodedImage) -> np.ndarray:
        return np.asarray(e.pixels, dtype=np.float64) * np.asarray(sigma).reshape(np.shape(e.pixels))
    return demask


def abs_sign_oracle(e: EncodedImage) -> np.ndarray:
    return np.abs(np.asarray(e.pixels, dtype=np.float64))


def single_encoding_attack(e: EncodedImage, pool_images: np.ndarray, k: int,
                           sign_oracle: Callable[[EncodedImage], np.ndarray] = abs_sign_oracle,
                           box: Tuple[float, float] = (0.0, 1.0)) -> SingleEncodingResult:
    """
    Peel k-2 public images off one encoding, guessing every weight is 1/k.

    The leftover is rescaled by the private mass read from the label (2/k when
    the label carries none).
    """
    pool = np.asarray(pool_images, dtype=np.float64)
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    if len(pool) < k - 2:
        raise ConfigError(f"public pool has {len(pool)} images, need at least {k - 2}")
    lo, hi = box
    residual = np.asarray(sign_oracle(e), dtype=np.float64)
    chosen: List[int] = []
    available = np.ones(len(pool), dtype=bool)
    for _ in range(k - 2):
        scores = ssim_matrix(residual[None], pool)[0]
        scores[~available] = -np.inf
        best = int(np.argmax(scores))
        chosen.append(best)
        available[best] = False
        residual = np.clip(residual - pool[best] / k, lo, hi)

    mass = float(np.sum(e.label)) if e.label is not None else 0.0
    if mass <= ZERO_TOL:
        mass = 2.0 / k
    return SingleEncodingResult(np.clip(residual / mass, lo, hi), chosen)


@pipeline_stage("baseline")
def baseline_node(state: dict) -> dict:
    ds = state["dataset"]
    cfg = state["config"]
    amap = state["assignment"]
    num_sets = len(state["clusters"].medoids)
    baseline = abs_mean_baseline(amap.members(num_sets), ds, cfg.bounds)
    state["baseline"] = baseline
    log.info(f"Abs-mean baseline computed for {num_sets} sources")
    state["messages"].append(AIMessage(content=f"Baseline images ready ({num_sets})"))
    return state


@pipeline_stage("recovery")
def recovery_node(state: dict) -> dict:
    ds = state["dataset"]
    cfg = state["config"]
    amap = state["assignment"]
    num_sets = len(state["clusters"].medoids)
    system = build_mix_system(amap.pairs, amap.lambdas, ds.flat(), num_sets, cfg.bounds)
    result = solve_abs_gd(system, state["baseline"], cfg.gd, shape=ds.params.shape)
    state["reconstruction"] = result
    state["messages"].append(
        AIMessage(content=f"Recovered {num_sets} images with {result.method}, objective {result.objective:.4g}")
    )
    return state


def should_run_solver(state: dict) -> str:
    """Skip the solver when only the baseline was requested."""
    if state["config"].baseline_only:
        return "evaluate"
    return "recover"
