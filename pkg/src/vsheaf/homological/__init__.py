from .modules import (INFINITE, FpModule, ModuleError, ModuleMap, base_change, cokernel,
                      image, kernel, prune, tensor)
from .complexes import (ChainComplex, ChainMap, ComplexError, Homology, homology,
                        is_quasi_iso, koszul_complex, tensor_complex)

__all__ = [
    "INFINITE", "FpModule", "ModuleError", "ModuleMap", "base_change", "cokernel", "image",
    "kernel", "prune", "tensor", "ChainComplex", "ChainMap", "ComplexError", "Homology",
    "homology", "is_quasi_iso", "koszul_complex", "tensor_complex",
]
