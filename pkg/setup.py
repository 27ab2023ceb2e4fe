"""Build hook for the optional compiled core (``ftcs._core``).

Without Cython or a C compiler the package installs pure-Python and the
decoder falls back to :mod:`ftcs.decoder.union_find`.  Set
``FTCS_NO_EXT=1`` to skip the extension deliberately.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or broken
            print(f"warning: compiled core not built ({exc}); using the pure-Python decoder", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); using the pure-Python decoder", file=sys.stderr)


ext_modules = []
if os.environ.get("FTCS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; installing without the compiled core", file=sys.stderr)
    else:
        ext_modules = cythonize(
            [Extension("ftcs._core", ["src/ftcs/_core.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
