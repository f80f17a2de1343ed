#!/usr/bin/env python3
"""
CSV export of sampled field grids
Writes x,y,u,v,p,region rows with doubles at 17 significant digits
"""

import csv
import logging
import os

import numpy as np

from spiral_errors import InvalidArgument
from spiral_field import FieldGrid

logger = logging.getLogger(__name__)

GRID_FIELDS = ['x', 'y', 'u', 'v', 'p', 'region']


def format_float(value: float) -> str:
    if np.isnan(value):
        return 'nan'
    return '%.17g' % value


class GridWriter:
    def __init__(self, csv_filename):
        """
        Args:
            csv_filename: Path of the CSV file; parent directories are created
        """
        self.csv_filename = os.fspath(csv_filename)

    def _prepare_directory(self):
        directory = os.path.dirname(self.csv_filename)
        if directory and not os.path.exists(directory):
            os.makedirs(directory, exist_ok=True)

    def _rows(self, grid: FieldGrid):
        for x, y, u, v, p, region in zip(grid.x, grid.y, grid.u, grid.v, grid.p, grid.region):
            yield {
                'x': format_float(x),
                'y': format_float(y),
                'u': format_float(u),
                'v': format_float(v),
                'p': format_float(p),
                'region': str(int(region)),
            }

    def write(self, grid: FieldGrid) -> int:
        """Write the grid, replacing any previous file; returns the row count"""
        try:
            self._prepare_directory()
            with open(self.csv_filename, 'w', newline='', encoding='utf-8') as f:
                writer = csv.DictWriter(f, fieldnames=GRID_FIELDS, lineterminator='\n')
                writer.writeheader()
                count = 0
                for row in self._rows(grid):
                    writer.writerow(row)
                    count += 1
        except OSError as e:
            logger.error(f"Error writing grid CSV {self.csv_filename}: {e}")
            raise InvalidArgument(f"cannot write {self.csv_filename}: {e}") from e

        logger.info(f"Wrote {count} rows ({grid.on_sheet_count} on the sheet) to {self.csv_filename}")
        return count
