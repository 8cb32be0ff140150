"""Build script: compiles the optional NSGA-II kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time), so any failure to cythonize or compile is non-fatal.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/instructevo/moea/_kernels.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"skipping compiled kernels ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
