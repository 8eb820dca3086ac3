"""Build script: compiles the optional Cython flow kernel.

The package works without the extension (a NumPy twin is selected at
import time), so the extension is marked optional and a failed build
does not break installation.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "latscat._flow_cy",
                ["src/latscat/_flow_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
