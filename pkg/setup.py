"""Build script for the optional compiled kernels.

The Cython extension is optional: when Cython is missing or compilation
fails, the package installs without it and ``ocralign._fallback`` is used.
Set ``OCRALIGN_NO_EXT=1`` to skip the extension on purpose.
"""
import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            sys.stderr.write(f"warning: skipping compiled kernels ({exc})\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"warning: failed to build {ext.name} ({exc})\n")


ext_modules = []
if not os.environ.get("OCRALIGN_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "ocralign._kernels",
                    ["src/ocralign/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
