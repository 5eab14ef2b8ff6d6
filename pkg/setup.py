"""Build script for the optional compiled spectral stepper.

The extension links against FFTW3 and accelerates the Navier-Stokes
time stepping kernel. If it cannot be built (no compiler, no FFTW),
the package still installs and falls back to the pure-numpy stepper.
"""

import os

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or FFTW missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(f"WARNING: building jerkrom._spectral_ext failed ({exc}); "
              "the pure-numpy stepper will be used instead.")


extensions = [
    Extension(
        "jerkrom._spectral_ext",
        ["src/jerkrom/_spectral_ext.pyx"],
        include_dirs=[np.get_include()],
        libraries=["fftw3", "m"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

if os.environ.get("JERKROM_NO_EXT"):
    extensions = []
else:
    from Cython.Build import cythonize

    extensions = cythonize(extensions, language_level=3)

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
