"""Build script for the compiled lattice kernel.

The package works without the extension (a pure-numpy fallback is selected
at import time), so a failed compile only costs speed, not correctness.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "spanalign._kernel",
                ["src/spanalign/_kernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: building without compiled kernel ({exc})")
    ext_modules = []

setup(ext_modules=ext_modules)
