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
"""A pytest conftest.py file that defines fixtures for common tests."""
import logging

import pytest

from common import logs

# pylint: disable=invalid-name


@pytest.fixture
def reset_log_extras():
    """Clears the default extras set by logs.initialize after a test."""
    yield
    logs._default_extras.clear()  # pylint: disable=protected-access
    logging.getLogger().setLevel(logging.WARNING)
