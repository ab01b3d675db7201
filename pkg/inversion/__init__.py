from .orthogonality import alessandrini_pair, stationary_orthogonality, cancellation_decomposition
from .reconstruct import scattering_vectors, fhat_direct, fhat_from_data, recover_potential
