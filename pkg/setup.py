"""Build the optional compiled kernels; installs without them if compilation fails."""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


def extensions():
    try:
        import numpy  # noqa: F401
        from Cython.Build import cythonize
    except ImportError:
        return []
    openmp = os.environ.get("BNEXACT_OPENMP", "1") != "0" and sys.platform != "darwin"
    flags = ["-O3", "-ffp-contract=off"]
    ext = Extension(
        "bnexact._ckernels",
        ["src/bnexact/_ckernels.pyx"],
        extra_compile_args=flags + (["-fopenmp"] if openmp else []),
        extra_link_args=["-fopenmp"] if openmp else [],
    )
    return cythonize([ext], language_level=3)


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler: fall back to pure Python
            print(f"warning: compiled kernels not built ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: {ext.name} not built ({exc})", file=sys.stderr)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
