"""
Pixel-exact reconstruction once the encoder's secrets are known.
"""

from typing import Optional

import numpy as np

from core.dataset_io import write_truth
from core.errors import ShapeError, UnverifiedSecretsError
from core.types import EncodedDataset
from encoder.instahide import PublicPool
from prngattack.seed_search import RecoveredSecrets
from stages.recovery_stage import build_mix_system, solve_least_squares
from utils import get_logger

log = get_logger(__name__)


def demask(ds: EncodedDataset, secrets: RecoveredSecrets) -> np.ndarray:
    sigma = np.stack([r.sigma for r in secrets.records]).astype(np.float64)
    return ds.flat() * sigma


def exact_reconstruct(ds: EncodedDataset, secrets: RecoveredSecrets, pub: Optional[PublicPool] = None) -> np.ndarray:
    """
    Undo the masks, then solve for the private images.

    With the public pool (and k > 2) the public contributions are subtracted
    and the remaining over-determined system M A = B' is solved directly.
    Otherwise the de-masked data goes through the sign-free least squares.
    """
    if not secrets.verified:
        raise UnverifiedSecretsError(f"seed {secrets.seed} was not verified; refusing to reconstruct")
    if len(secrets.records) != len(ds):
        raise ShapeError(f"{len(secrets.records)} records for {len(ds)} encodings")

    p = ds.params
    B = demask(ds, secrets)
    pairs = np.array([r.private_indices for r in secrets.records], dtype=np.int64)
    private_weights = np.array([r.lambdas[:2] for r in secrets.records], dtype=np.float64)

    if p.k > 2 and pub is not None:
        pool = pub.images.reshape(len(pub), -1)
        for i, rec in enumerate(secrets.records):
            B[i] -= np.asarray(rec.lambdas[2:]) @ pool[list(rec.public_indices)]
        system = build_mix_system(pairs, private_weights, B, p.num_private)
        images, residuals, rank, _ = np.linalg.lstsq(system.M.toarray(), B, rcond=None)
        if rank < p.num_private:
            log.warning(f"Mix matrix is rank deficient ({rank} < {p.num_private}); minimum-norm solution")
        images = np.clip(images, 0.0, 1.0)
        log.info(f"Exact solve with public pool: residual {float(np.sum(residuals)) if residuals.size else 0.0:.3g}")
        return images.reshape(p.num_private, *p.shape)

    if p.k > 2:
        log.info("No public pool given; solving the sign-free system with public mass as noise")
    system = build_mix_system(pairs, private_weights, B, p.num_private)
    return solve_least_squares(system, shape=p.shape).images


def export_secrets(path, ds: EncodedDataset, secrets: RecoveredSecrets):
    """Write recovered secrets in the truth-sidecar format."""
    return write_truth(path, secrets.records, ds.params, seed=secrets.seed)
