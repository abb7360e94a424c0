"""Build the optional compiled episode kernel.

If Cython or a C compiler is missing the package still installs and runs on
the pure-Python reference loop.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self.warn(f"compiled kernel not built, using pure-Python fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self.warn(f"compiled kernel not built, using pure-Python fallback: {exc}")


def extensions():
    if os.environ.get("CHAOSRL_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "chaosrl._kernel",
        ["src/chaosrl/_kernel.pyx"],
        include_dirs=[np.get_include()],
        # no -ffast-math / FMA contraction: runs must be bit-reproducible
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
