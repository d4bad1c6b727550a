// Parsing and validation of the two CSV report formats the pipeline emits:
// protocol rows (protocol,cell_id,train_tag,test_tag,metric,value,count) and
// per-epoch loss logs (epoch,total,depth,ren,pen).

export interface ProtocolRow {
    protocol: string;
    cell_id: string;
    train_tag: string;
    test_tag: string;
    metric: string;
    value: number;
    rawValue: string; // printed verbatim on figures
    count: number;
}

export interface LossRow {
    epoch: number;
    total: number;
    depth: number;
    ren: number;
    pen: number;
}

export const KNOWN_METRICS = new Set([
    "mrpe", "mrpe_z", "mpjpe_abs", "mpjpe_rel", "pck_abs", "pck_root",
    "mrpe_ren", "mrpe_z_ren",
]);

const PROTOCOL_HEADER = ["protocol", "cell_id", "train_tag", "test_tag", "metric", "value", "count"];
const LOSS_HEADER = ["epoch", "total", "depth", "ren", "pen"];

export class CsvError extends Error {}

function splitLines(text: string): string[] {
    return text.split(/\r?\n/).filter(line => line.trim().length > 0);
}

function requireFinite(raw: string, row: number, column: string): number {
    const value = Number(raw);
    if (raw.trim() === "" || !Number.isFinite(value)) {
        throw new CsvError(`row ${row}: column '${column}' has non-finite value '${raw}'`);
    }
    return value;
}

export function parseProtocolCsv(text: string): ProtocolRow[] {
    const lines = splitLines(text);
    if (lines.length === 0) {
        throw new CsvError("empty CSV: no header row");
    }
    const header = lines[0].split(",").map(s => s.trim());
    if (JSON.stringify(header) !== JSON.stringify(PROTOCOL_HEADER)) {
        throw new CsvError(`unexpected header '${lines[0]}'; expected '${PROTOCOL_HEADER.join(",")}'`);
    }
    if (lines.length === 1) {
        throw new CsvError("empty CSV: no data rows");
    }
    const rows: ProtocolRow[] = [];
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(",");
        if (parts.length !== PROTOCOL_HEADER.length) {
            throw new CsvError(`row ${i}: expected ${PROTOCOL_HEADER.length} columns, got ${parts.length}`);
        }
        const metric = parts[4].trim();
        if (!KNOWN_METRICS.has(metric)) {
            throw new CsvError(`row ${i}: unknown metric name '${metric}'`);
        }
        rows.push({
            protocol: parts[0].trim(),
            cell_id: parts[1].trim(),
            train_tag: parts[2].trim(),
            test_tag: parts[3].trim(),
            metric,
            value: requireFinite(parts[5], i, "value"),
            rawValue: parts[5].trim(),
            count: requireFinite(parts[6], i, "count"),
        });
    }
    return rows;
}

export function parseLossCsv(text: string): LossRow[] {
    const lines = splitLines(text);
    if (lines.length === 0) {
        throw new CsvError("empty CSV: no header row");
    }
    const header = lines[0].split(",").map(s => s.trim());
    for (const column of LOSS_HEADER) {
        if (!header.includes(column)) {
            throw new CsvError(`missing column '${column}' in loss log header '${lines[0]}'`);
        }
    }
    if (lines.length === 1) {
        throw new CsvError("empty CSV: no data rows");
    }
    const index = Object.fromEntries(LOSS_HEADER.map(c => [c, header.indexOf(c)]));
    const rows: LossRow[] = [];
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(",");
        rows.push({
            epoch: requireFinite(parts[index.epoch], i, "epoch"),
            total: requireFinite(parts[index.total], i, "total"),
            depth: requireFinite(parts[index.depth], i, "depth"),
            ren: requireFinite(parts[index.ren], i, "ren"),
            pen: requireFinite(parts[index.pen], i, "pen"),
        });
    }
    return rows;
}

export function filterProtocol(rows: ProtocolRow[], protocol: string, metric: string): ProtocolRow[] {
    const picked = rows.filter(r => r.protocol === protocol && r.metric === metric);
    if (picked.length === 0) {
        throw new CsvError(`no rows for protocol '${protocol}' with metric '${metric}'`);
    }
    return picked;
}
