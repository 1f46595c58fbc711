/**
 * Strict reader for the simulator's CSV exports.
 *
 * The exports are plain comma-separated tables with a header row and no
 * quoting, so anything surprising (missing columns, ragged rows, non-numeric
 * values where numbers belong) is a real defect in the input and gets a
 * loud, named error instead of a silent NaN in a chart.
 */

export class CsvFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'CsvFormatError';
  }
}

export interface CsvTable {
  file: string;
  columns: string[];
  /** Raw field strings, keyed by column name, one record per data row. */
  rows: Record<string, string>[];
}

export function parseCsv(text: string, file: string, required: string[]): CsvTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new CsvFormatError(`${file}: empty file`);
  }
  const columns = (lines[0] as string).split(',');
  const seen = new Set<string>();
  for (const col of columns) {
    if (seen.has(col)) {
      throw new CsvFormatError(`${file}: duplicate column '${col}'`);
    }
    seen.add(col);
  }
  for (const col of required) {
    if (!seen.has(col)) {
      throw new CsvFormatError(
        `${file}: missing column '${col}' (found: ${columns.join(', ')})`);
    }
  }
  if (lines.length === 1) {
    throw new CsvFormatError(`${file}: no data rows`);
  }

  const rows: Record<string, string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = (lines[i] as string).split(',');
    if (fields.length !== columns.length) {
      throw new CsvFormatError(
        `${file} line ${i + 1}: expected ${columns.length} fields, got ${fields.length}`);
    }
    const row: Record<string, string> = {};
    for (let c = 0; c < columns.length; c++) {
      row[columns[c] as string] = fields[c] as string;
    }
    rows.push(row);
  }
  return { file, columns, rows };
}

/** Field accessor for columns parseCsv already guaranteed to exist. */
export function field(table: CsvTable, row: Record<string, string>, column: string): string {
  const value = row[column];
  if (value === undefined) {
    throw new CsvFormatError(`${table.file}: missing column '${column}'`);
  }
  return value;
}

/** Numeric field accessor; names the offending column and value on failure. */
export function numericField(
  table: CsvTable, row: Record<string, string>, column: string, line: number,
): number {
  const raw = field(table, row, column);
  const value = Number(raw);
  if (raw.trim() === '' || Number.isNaN(value)) {
    throw new CsvFormatError(
      `${table.file} line ${line}: column '${column}' is not a number: '${raw}'`);
  }
  return value;
}
