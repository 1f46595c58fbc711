import { describe, expect, it } from 'vitest';
import { CsvFormatError, parseCsv } from '../src/csv.js';
import { sweepSeries } from '../src/series.js';

const HEADER = 'scheduler,n_ues,seed,direction,flow,plr';

describe('parseCsv', () => {
  it('rejects an empty file by name', () => {
    expect(() => parseCsv('', 'summary.csv', ['plr']))
      .toThrowError(/summary\.csv: empty file/);
  });

  it('rejects a header with no data rows', () => {
    expect(() => parseCsv(`${HEADER}\n`, 'summary.csv', ['plr']))
      .toThrowError(/no data rows/);
  });

  it('names the missing column', () => {
    const text = 'scheduler,n_ues,seed\nflex,1,7\n';
    expect(() => parseCsv(text, 'summary.csv', ['scheduler', 'plr']))
      .toThrowError(/summary\.csv: missing column 'plr'/);
  });

  it('rejects ragged rows with the line number', () => {
    const text = `${HEADER}\nflex,1,7,all,all,0.5\nflex,2,7,all,all\n`;
    expect(() => parseCsv(text, 'summary.csv', ['plr']))
      .toThrowError(/line 3: expected 6 fields, got 5/);
  });

  it('rejects duplicate columns', () => {
    expect(() => parseCsv('a,b,a\n1,2,3\n', 'x.csv', []))
      .toThrowError(/duplicate column 'a'/);
  });

  it('keeps field values as exact strings', () => {
    const table = parseCsv(`${HEADER}\nflex,13,7,all,all,0.002100\n`, 's.csv', ['plr']);
    expect(table.rows[0]!['plr']).toBe('0.002100');
  });
});

describe('sweepSeries input validation', () => {
  it('names a non-numeric plr value and its line', () => {
    const table = parseCsv(
      `${HEADER}\nflex,1,7,all,all,not-a-number\n`, 'summary.csv',
      ['scheduler', 'n_ues', 'seed', 'direction', 'flow', 'plr']);
    expect(() => sweepSeries(table))
      .toThrowError(/line 2: column 'plr' is not a number: 'not-a-number'/);
  });

  it('rejects files without whole-cell rows', () => {
    const table = parseCsv(
      `${HEADER}\nflex,1,7,ul,all,0.1\nflex,1,7,dl,all,0.2\n`, 'summary.csv',
      ['plr']);
    expect(() => sweepSeries(table)).toThrowError(CsvFormatError);
    expect(() => sweepSeries(table)).toThrowError(/granularity cell/);
  });
});
