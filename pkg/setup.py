"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: `searchgap._backend`
falls back to the pure-NumPy kernels at import time. Set SEARCHGAP_SKIP_EXT=1
to skip compilation entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Degrade to the pure-Python backend if compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "warning: could not build searchgap._kernels "
            f"({exc}); the pure-NumPy backend will be used"
        )


ext_modules = []
if not os.environ.get("SEARCHGAP_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "searchgap._kernels",
                    ["src/searchgap/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError as exc:
        print(f"warning: Cython/NumPy unavailable ({exc}); skipping extension build")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
