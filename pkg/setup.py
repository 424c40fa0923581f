"""Optional compiled-kernel build.

`pip install .` works without a compiler or Cython — the package falls back
to the pure-Python kernels at import. Build the speedups in place with:

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Never fail the install over the optional extension."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"skipping compiled kernels ({exc}); pure-Python fallback in use")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"skipping {ext.name} ({exc}); pure-Python fallback in use")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "discodrive.metrics._speedups",
                sources=["src/discodrive/metrics/_speedups.pyx"],
            )
        ],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
