"""Counter-mode seed splitting so every run is independent and reproducible."""
import hashlib


def derive_seed(master: int, *labels) -> bytes:
    h = hashlib.sha256(str(master).encode())
    for label in labels:
        h.update(b"\x1f" + str(label).encode())
    return h.digest()


def derive_lfsr_seed(master: int, *labels, width: int = 64) -> int:
    """A non-zero ``width``-bit integer derived from ``master`` and ``labels``."""
    value = int.from_bytes(derive_seed(master, *labels), "big") % ((1 << width) - 1)
    return value + 1
