import os

from dotenv import load_dotenv

load_dotenv()

# Get values from environment variables
THREADS = int(os.getenv("BERGMAN_THREADS", "1"))
OUTPUT_DIR = os.getenv("BERGMAN_OUTPUT_DIR", "./storage/results")
LOG_LEVEL = os.getenv("BERGMAN_LOG_LEVEL", "WARNING")
K_CAP_BF = int(os.getenv("BERGMAN_K_CAP_BF", "5000"))
K_CAP_CPM = int(os.getenv("BERGMAN_K_CAP_CPM", "2000"))

# Largest number of monomials a single basis may hold
BASIS_ENTRY_CAP = int(os.getenv("BERGMAN_BASIS_ENTRY_CAP", "4000000"))


def thread_cap(requested: int | None = None) -> int:
    """Worker count: the request if given, else BERGMAN_THREADS, never above the CPU count."""
    wanted = THREADS if requested is None else requested
    return max(1, min(wanted, os.cpu_count() or 1))
