from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: install the pure-Python kernel only
    cythonize = None


class OptionalBuildExt(build_ext):
    """Build the compiled kernel when possible; fall back silently otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"nads: compiled kernel not built ({exc}); using the python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"nads: compiled kernel not built ({exc}); using the python kernel")


ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "nads.kernels._core",
                ["src/nads/kernels/_core.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
