"""
Digests of audit reports and replay dumps.
"""
import hashlib
import json
from typing import Any, Literal

from config import CHECKSUM_ALGORITHM


def checksum_text(text: str, algorithm: Literal["md5", "sha256"] = CHECKSUM_ALGORITHM) -> str:
    """
    Calculate the checksum of text.

    Args:
        text: Text, hashed as UTF-8
        algorithm: Hash algorithm to use ("md5" or "sha256")

    Returns:
        Hexadecimal string of the calculated hash
    """
    hash_func = hashlib.md5() if algorithm == "md5" else hashlib.sha256()
    hash_func.update(text.encode("utf-8"))
    return hash_func.hexdigest()


def checksum_document(document: Any) -> str:
    """Digest of a JSON-serializable document in canonical (sorted, compact) form."""
    return checksum_text(json.dumps(document, sort_keys=True, separators=(",", ":")))
