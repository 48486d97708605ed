"""Build script: compiles the optional fused-kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time); building it just makes the pointwise hot loops faster.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "hismhd._kernels_cy",
        sources=["src/hismhd/_kernels_cy.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
)
