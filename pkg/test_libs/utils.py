# Copyright 2020 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Utilities used in testing."""


class MockPool:
    """Serial stand-in for multiprocessing.Pool that records its inputs."""

    def __init__(self, *args, **kwargs):  # pylint: disable=unused-argument
        """Initialize a mock version of multiprocessing.Pool."""
        self.func_calls = []

    def map(self, func, iterable, chunksize=1):  # pylint: disable=unused-argument
        """Mock of multiprocessing.Pool.map."""
        results = []
        for item in iterable:
            self.func_calls.append(item)
            results.append(func(item))
        return results

    def __enter__(self):
        return self

    def __exit__(self, *args, **kwargs):
        pass
