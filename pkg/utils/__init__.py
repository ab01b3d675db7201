from .logger_config import configure_logging
from .field_io import read_field, write_field
from .report_writer import Manifest, write_csv
