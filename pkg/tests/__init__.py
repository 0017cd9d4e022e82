# Copyright (c) pv-regularity-lab contributors.
# Licensed under the MIT License.

"""Test suite for the pv_regularity_lab package."""
