# Builds the optional Cython kernels; the package falls back to pure Python
# when the extension is missing or fails to compile.
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            warnings.warn(f"compiled kernels not built, using pure Python: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            warnings.warn(f"failed to build {ext.name}: {exc}")


ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "docstruct._ckernels",
                ["src/docstruct/_ckernels.pyx"],
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
