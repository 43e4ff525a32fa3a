"""Shared fixtures: meshes, element kernels, and random element samples."""

import numpy as np
import pytest

from vemflow.mesh import MESH_FAMILIES, generate_mesh
from vemflow.projection import ElementKernel, build_kernels


@pytest.fixture(scope="session")
def quad4():
    return generate_mesh("quad", 4)


@pytest.fixture(scope="session")
def quad4_kernels(quad4):
    return build_kernels(quad4)


def unit_square_kernel():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return ElementKernel(verts, 1.0, np.array([0.5, 0.5]), np.sqrt(2.0))


def sample_kernels(n_total, seed=0):
    """Draw ~n_total element kernels across all shipped mesh families."""
    rng = np.random.default_rng(seed)
    pool = []
    for fam in MESH_FAMILIES:
        for n in (4, 6):
            mesh = generate_mesh(fam, n, seed=1)
            pool.extend(build_kernels(mesh))
    idx = rng.choice(len(pool), size=min(n_total, len(pool)), replace=False)
    return [pool[i] for i in idx]
