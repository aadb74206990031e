import hashlib
import logging
import os
import tempfile
import time
import warnings

import numpy

from ..exceptions import GpgError
from .spectral import GraphSpectrum, eigendecompose

CACHE_DIR = os.environ.get(
    "GPGRAPH_CACHE_DIR", os.path.join(tempfile.gettempdir(), "gpgraph-cache")
)
RECONSTRUCTION_RTOL = 1e-8

logger = logging.getLogger("gpgraph.graph.cache")


class SpectrumCache:
    """On-disk cache of Laplacian eigendecompositions.

    Entries are keyed by a hash of the matrix bytes and expire after
    ``cache_timeout`` seconds. A cached spectrum is only returned when it still
    reconstructs the requested matrix, so the cache is never authoritative.
    """

    def __init__(self, cache_timeout=600, cache_dir=CACHE_DIR):
        if not os.path.exists(cache_dir):
            os.makedirs(cache_dir, exist_ok=True)
        self.cache_dir = cache_dir
        self.cache_timeout = cache_timeout

    def _cachepath(self, laplacian):
        matrix = numpy.ascontiguousarray(laplacian, dtype=float)
        digest = hashlib.sha224(matrix.tobytes())
        digest.update(str(matrix.shape).encode())
        return os.path.join(self.cache_dir, digest.hexdigest() + ".npz")

    def get(self, laplacian):
        """Cached spectrum for ``laplacian`` or None"""
        cache_file = self._cachepath(laplacian)
        if not os.path.exists(cache_file):
            return None
        if os.path.getmtime(cache_file) + self.cache_timeout < time.time():
            os.remove(cache_file)
            return None
        try:
            with numpy.load(cache_file) as data:
                spectrum = GraphSpectrum(
                    basis=data["basis"], eigenvalues=data["eigenvalues"]
                )
        except (OSError, ValueError, KeyError, GpgError):
            logger.debug("Discarding unreadable cache entry %s", cache_file)
            os.remove(cache_file)
            return None
        reconstructed = (spectrum.basis * spectrum.eigenvalues) @ spectrum.basis.T
        scale = max(numpy.linalg.norm(laplacian), 1.0)
        if numpy.linalg.norm(reconstructed - laplacian) > RECONSTRUCTION_RTOL * scale:
            warnings.warn(f"Stale spectrum cache entry {cache_file} removed")
            os.remove(cache_file)
            return None
        return spectrum

    def put(self, laplacian, spectrum):
        cache_file = self._cachepath(laplacian)
        fd, tmpfile = tempfile.mkstemp(dir=self.cache_dir, suffix=".npz")
        with os.fdopen(fd, "wb") as f:
            numpy.savez(f, basis=spectrum.basis, eigenvalues=spectrum.eigenvalues)
        os.replace(tmpfile, cache_file)

    def spectrum(self, laplacian):
        """Eigendecomposition of ``laplacian``, read from or written to the cache"""
        cached = self.get(laplacian)
        if cached is not None:
            logger.debug("Spectrum cache hit")
            return cached
        spectrum = eigendecompose(laplacian)
        if self.cache_timeout > 0:
            self.put(laplacian, spectrum)
        return spectrum
