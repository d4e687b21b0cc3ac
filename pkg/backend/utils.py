"""
Shared utilities for the InstaLab backend.
Handles logging, device selection, results directories and run manifests.
"""

import logging
import shlex
import shutil
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, Optional

import torch

CODE_VERSION = "0.1.0"

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
log = logging.getLogger(__name__)

RESULTS_DIR = Path("./results")
INPUT_DIR = RESULTS_DIR / "input"
OUTPUT_DIR = RESULTS_DIR / "output"
MANIFEST_NAME = "MANIFEST.md"

# Auto-select device; MPS has no float64 support, so it is never picked
if torch.cuda.is_available():
    DEVICE = "cuda"
else:
    DEVICE = "cpu"

# Solver tensors are float64 throughout
DTYPE = torch.float64

log.debug(f"Using device={DEVICE}, dtype={DTYPE}")


def get_device():
    """Get the selected device."""
    return DEVICE


def get_dtype():
    """Get the selected dtype."""
    return DTYPE


def get_logger(name: str):
    """Get a logger instance for a module."""
    return logging.getLogger(name)


def set_threads(threads: Optional[int]) -> int:
    """Apply --threads to torch and return the worker count the lab should use."""
    if threads is None or threads < 1:
        return torch.get_num_threads()
    torch.set_num_threads(threads)
    return threads


def ensure_dirs(*dirs: Path) -> None:
    for d in dirs:
        Path(d).mkdir(parents=True, exist_ok=True)


def write_manifest(
    out_dir: Path,
    subcommand: str,
    argv: Iterable[str],
    seed: Optional[int],
    params: Dict[str, object],
    inputs: Optional[Dict[str, str]] = None,
    outputs: Optional[Dict[str, str]] = None,
    description: str = "InstaLab run manifest. Replaying the command line reproduces the outputs.",
) -> Path:
    """
    Write MANIFEST.md next to a run's outputs.

    The layout mirrors the archived run cards: a front-matter block followed by
    ``- **Key**: value`` lines, which tools.parsing_tools reads back.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    now = datetime.now()

    lines = [
        "---",
        f"name: instalab {subcommand} {now.strftime('%Y-%m-%d_%H-%M-%S')}",
        f"description: {description}",
        "---",
        "",
        "## Run Metadata",
        f"- **Subcommand**: {subcommand}",
        f"- **Command**: {shlex.join(list(argv))}",
        f"- **Generated**: {now.strftime('%Y-%m-%d %H:%M:%S')}",
        f"- **Master Seed**: {'none' if seed is None else seed}",
        f"- **Code Version**: {CODE_VERSION}",
        "",
        "## Inputs",
    ]
    lines += [f"- **input.{k}**: {v}" for k, v in sorted((inputs or {}).items())]
    lines += ["", "## Outputs"]
    lines += [f"- **output.{k}**: {v}" for k, v in sorted((outputs or {}).items())]
    lines += ["", "## Parameters"]
    lines += [f"- **param.{k}**: {v}" for k, v in sorted(params.items())]
    lines += [
        "",
        "## System Information",
        f"- **Device Used**: {DEVICE}",
        f"- **Data Type**: {DTYPE}",
        "",
        "---",
        "*Generated by InstaLab*",
        "",
    ]

    manifest = out_dir / MANIFEST_NAME
    manifest.write_text("\n".join(lines))
    log.info(f"Created {MANIFEST_NAME} at {manifest}")
    return manifest


def archive_run(run_dir: Path, archive_root: Optional[Path] = None) -> Path:
    """
    Copy a finished run (its manifest and outputs) into a timestamped folder.

    Args:
        run_dir: Directory holding MANIFEST.md and the run's outputs
        archive_root: Where archives go; defaults to OUTPUT_DIR

    Returns:
        Path to the archive folder
    """
    run_dir = Path(run_dir)
    root = Path(archive_root) if archive_root is not None else OUTPUT_DIR
    timestamp = datetime.now().strftime("%Y-%m-%d_%H-%M-%S")
    archive_folder = root / timestamp
    suffix = 1
    while archive_folder.exists():
        archive_folder = root / f"{timestamp}_{suffix}"
        suffix += 1

    shutil.copytree(run_dir, archive_folder)
    log.info(f"Archived {run_dir} to {archive_folder}")
    return archive_folder
