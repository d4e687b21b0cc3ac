import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from utils import MANIFEST_NAME, get_logger

log = get_logger(__name__)

KEY_LINE = re.compile(r"^- \*\*(.+?)\*\*:\s*(.*)$", re.MULTILINE)


@dataclass
class RunManifest:
    """Parsed MANIFEST.md of one run."""
    name: str
    description: str
    run_folder: str
    subcommand: str
    argv: List[str]
    generated_timestamp: str
    seed: Optional[int]
    code_version: str
    device_used: str
    data_type: str
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    params: Dict[str, str] = field(default_factory=dict)

    def __str__(self) -> str:
        return f"RunManifest(run={self.run_folder}, subcommand={self.subcommand}, seed={self.seed})"


def parse_manifest(manifest_path: Path) -> Optional[RunManifest]:
    """
    Parse a single MANIFEST.md file.

    Args:
        manifest_path: Path to MANIFEST.md

    Returns:
        RunManifest or None if the file is missing or malformed
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        return None

    content = manifest_path.read_text()
    try:
        name = re.search(r"^name:\s*(.+)$", content, re.MULTILINE).group(1).strip()
        description = re.search(r"^description:\s*(.+)$", content, re.MULTILINE).group(1).strip()
        entries = {k.strip(): v.strip() for k, v in KEY_LINE.findall(content)}

        seed_text = entries.get("Master Seed", "none")
        return RunManifest(
            name=name,
            description=description,
            run_folder=manifest_path.parent.name,
            subcommand=entries["Subcommand"],
            argv=shlex.split(entries.get("Command", "")),
            generated_timestamp=entries.get("Generated", "Unknown"),
            seed=None if seed_text == "none" else int(seed_text),
            code_version=entries.get("Code Version", "Unknown"),
            device_used=entries.get("Device Used", "Unknown"),
            data_type=entries.get("Data Type", "Unknown"),
            inputs=_section(entries, "input."),
            outputs=_section(entries, "output."),
            params=_section(entries, "param."),
        )
    except (AttributeError, KeyError, ValueError) as e:
        log.error(f"Error parsing {MANIFEST_NAME} at {manifest_path}: {e}")
        return None


def _section(entries: Dict[str, str], prefix: str) -> Dict[str, str]:
    return {k[len(prefix):]: v for k, v in entries.items() if k.startswith(prefix)}


def parse_all_manifests(output_dir: Path) -> Dict[str, RunManifest]:
    """
    Parse every MANIFEST.md one level below output_dir.

    Returns:
        Dictionary mapping run folder names to RunManifest objects
    """
    manifests: Dict[str, RunManifest] = {}
    output_dir = Path(output_dir)
    if not output_dir.exists():
        return manifests

    for manifest_file in sorted(output_dir.glob(f"*/{MANIFEST_NAME}")):
        metadata = parse_manifest(manifest_file)
        if metadata:
            manifests[metadata.run_folder] = metadata
    return manifests
