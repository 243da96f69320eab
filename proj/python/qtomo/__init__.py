# Copyright 2026 The qtomo authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Hamiltonian reconstruction from quantum quench data.

Thin wrapper over the compiled extension. Installed wheels carry the
extension inside this package; development builds leave it at the build
tree root, so both locations are tried.
"""

try:
    from ._qtomo import *  # noqa: F401,F403
    from ._qtomo import __version__  # noqa: F401
except ImportError:  # development layout: extension on sys.path directly
    from _qtomo import *  # noqa: F401,F403
    from _qtomo import __version__  # noqa: F401
