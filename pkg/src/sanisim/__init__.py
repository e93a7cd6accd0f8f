"""NAND flash secure-deletion simulator with a built-in BCH engine."""

from .config import RunConfig, load_config, parse_config
from .ecc import PageCodec, craft_uncorrectable_mask, decode, encode, make_code, make_field
from .ftl import Ftl, PageState
from .nand import Device, GeometryConfig, PageAddress, PulseReport, new_device
from .sanitize import (
    CodeModulationConfig,
    ComparisonTable,
    DeletionReport,
    Scheme,
    Verification,
    code_modulated_delete,
    compare_schemes,
    deletion_pulse_page,
    down_bit_program_page,
    partial_overwrite_page,
    scrub_page,
    secure_delete,
    verify_deletion,
)

__version__ = "0.1.0"
