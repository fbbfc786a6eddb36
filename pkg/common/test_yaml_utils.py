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
"""Tests for yaml_utils.py."""
import pytest

from common import filesystem
from common import yaml_utils

# pylint: disable=invalid-name,unused-argument


def test_write_keeps_key_order(fs):
    """Tests that keys are written in insertion order."""
    yaml_utils.write('/run/config.yaml', {'seed': 0, 'mode': 'full', 'a': 1})
    assert filesystem.read('/run/config.yaml') == 'seed: 0\nmode: full\na: 1\n'
    assert list(yaml_utils.read('/run/config.yaml')) == ['seed', 'mode', 'a']


def test_read_missing_file(fs):
    """Tests that a missing file raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        yaml_utils.read('/run/missing.yaml')
