import type { IterationRecord, MetricsPayload } from "./types.js";

/**
 * Session metrics panel: per-iteration series, budget remaining, and
 * the strategy in play.
 *
 * Every number shown is copied from the metrics payload. The service
 * already computed EER and sampling rates; recomputing anything client
 * side would invite drift between the chart and the session logalike
 * CSV, so the table prints the raw values verbatim.
 */

export interface DashboardSeries {
  sampPct: number[];
  eer: (number | null)[];
  fpIterations: (number | null)[];
}

export interface DashboardController {
  readonly metrics: MetricsPayload;
  series(): DashboardSeries;
  budgetRemaining(): number;
}

const CHART_WIDTH = 320;
const CHART_HEIGHT = 120;
const CHART_PAD = 8;

const SVG_NS = "http://www.w3.org/2000/svg";

function cell(text: string): HTMLTableCellElement {
  const td = document.createElement("td");
  td.textContent = text;
  return td;
}

function raw(value: number | null): string {
  return value === null ? "-" : String(value);
}

/**
 * Scale one series into polyline points. Each series is normalized to
 * its own maximum; the chart shows shape, the table shows numbers.
 */
function polylinePoints(
  values: { x: number; y: number }[],
  xMax: number,
  yMax: number,
): string {
  const spanX = CHART_WIDTH - 2 * CHART_PAD;
  const spanY = CHART_HEIGHT - 2 * CHART_PAD;
  return values
    .map((p) => {
      const px = CHART_PAD + (xMax === 0 ? 0 : (p.x / xMax) * spanX);
      const py = CHART_HEIGHT - CHART_PAD - (yMax === 0 ? 0 : (p.y / yMax) * spanY);
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
}

function seriesLine(
  records: IterationRecord[],
  pick: (r: IterationRecord) => number | null,
  xMax: number,
  className: string,
): SVGPolylineElement | null {
  const points = records
    .map((r) => ({ x: r.iteration, y: pick(r) }))
    .filter((p): p is { x: number; y: number } => p.y !== null);
  if (points.length === 0) {
    return null;
  }
  const yMax = Math.max(...points.map((p) => p.y));
  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("class", className);
  line.setAttribute("points", polylinePoints(points, xMax, yMax));
  line.setAttribute("fill", "none");
  return line;
}

export function renderDashboard(
  root: HTMLElement,
  metrics: MetricsPayload,
): DashboardController {
  root.textContent = "";
  const section = document.createElement("section");
  section.className = "dashboard";

  const header = document.createElement("header");
  header.className = "dashboard-header";
  const strategy = document.createElement("span");
  strategy.className = "strategy";
  strategy.textContent = metrics.strategy;
  const budget = document.createElement("span");
  budget.className = "budget";
  const remaining = metrics.n_rounds - metrics.iteration;
  budget.textContent = metrics.session_finished
    ? "budget exhausted"
    : `${remaining} of ${metrics.n_rounds} rounds left`;
  const pool = document.createElement("span");
  pool.className = "pool";
  pool.textContent = `pool ${metrics.n_pool}`;
  header.appendChild(strategy);
  header.appendChild(budget);
  header.appendChild(pool);
  section.appendChild(header);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "chart");
  svg.setAttribute("viewBox", `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`);
  const xMax = Math.max(metrics.n_rounds, 1);
  const sampLine = seriesLine(
    metrics.records,
    (r) => r.sampling_rate_pct,
    xMax,
    "samp-line",
  );
  if (sampLine) {
    svg.appendChild(sampLine);
  }
  const eerLine = seriesLine(metrics.records, (r) => r.eer, xMax, "eer-line");
  if (eerLine) {
    svg.appendChild(eerLine);
  }
  section.appendChild(svg);

  const table = document.createElement("table");
  table.className = "metrics-table";
  const thead = document.createElement("thead");
  const headRow = document.createElement("tr");
  for (const name of ["Iter", "Labeled", "Samp%", "EER", "Solver iters"]) {
    const th = document.createElement("th");
    th.textContent = name;
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  table.appendChild(thead);
  const tbody = document.createElement("tbody");
  for (const r of metrics.records) {
    const row = document.createElement("tr");
    row.appendChild(cell(String(r.iteration)));
    row.appendChild(cell(String(r.n_labeled)));
    row.appendChild(cell(String(r.sampling_rate_pct)));
    row.appendChild(cell(raw(r.eer)));
    row.appendChild(cell(raw(r.fp_iterations)));
    tbody.appendChild(row);
  }
  table.appendChild(tbody);
  section.appendChild(table);

  root.appendChild(section);

  return {
    metrics,
    series(): DashboardSeries {
      return {
        sampPct: metrics.records.map((r) => r.sampling_rate_pct),
        eer: metrics.records.map((r) => r.eer),
        fpIterations: metrics.records.map((r) => r.fp_iterations),
      };
    },
    budgetRemaining: () => remaining,
  };
}
