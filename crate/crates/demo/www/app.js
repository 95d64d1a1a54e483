import init, { explore_centrality, estimate_distribution, sigma_min_curve } from './pkg/mlnetreg_demo.js';

const COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd'];
const status = document.getElementById('status');

function formValues(form) {
  return Object.fromEntries(new FormData(form).entries());
}

function call(fn, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) {
    status.textContent = out.error;
    status.className = 'status error';
    return null;
  }
  status.textContent = '';
  status.className = 'status';
  return out;
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = '#888';
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function scale(lo, hi, a, b) {
  const span = hi - lo || 1;
  return v => a + (v - lo) / span * (b - a);
}

function drawCentrality(view) {
  const canvas = document.getElementById('cent-canvas');
  const ctx = canvas.getContext('2d');
  const { width: w, height: h } = canvas;
  const pad = 30;
  axes(ctx, w, h, pad);
  const totals = view.c.map(row => row.reduce((s, v) => s + v, 0));
  const zMax = Math.max(...view.z) * view.n_layers;
  const top = Math.max(...totals, zMax);
  const y = scale(0, top, h - pad, pad / 2);
  const bw = (w - 1.5 * pad) / view.n_nodes;
  totals.forEach((t, i) => {
    ctx.fillStyle = COLORS[(view.labels[i] - 1) % COLORS.length];
    ctx.fillRect(pad + i * bw, y(t), Math.max(bw - 1, 1), h - pad - y(t));
  });
  // Z times L sits on the same scale as the row sums of C
  ctx.strokeStyle = '#000';
  ctx.beginPath();
  view.z.forEach((z, i) => {
    const px = pad + (i + 0.5) * bw;
    i === 0 ? ctx.moveTo(px, y(z * view.n_layers)) : ctx.lineTo(px, y(z * view.n_layers));
  });
  ctx.stroke();
  ctx.fillStyle = '#333';
  ctx.fillText(top.toFixed(2), 2, pad / 2 + 8);
  ctx.fillText('node', w / 2, h - 8);
  document.getElementById('cent-readout').textContent =
    `λ1 = ${view.lambda1.toFixed(4)}, λ2 = ${view.lambda2.toFixed(4)}, gap δ = ${view.gap.toFixed(4)}, ` +
    `a_N = ${view.a_n.toFixed(3)}, a_N/δ = ${(view.a_n / view.gap).toFixed(3)}. ` +
    'Bars: row sums of C by community; line: L·Z.';
}

function drawQq(coef) {
  const canvas = document.getElementById('dist-canvas');
  const ctx = canvas.getContext('2d');
  const { width: w, height: h } = canvas;
  const pad = 30;
  axes(ctx, w, h, pad);
  if (!coef.qq.length) {
    ctx.fillText('QQ data needs at least 10 replications with spread', pad + 10, h / 2);
    return;
  }
  const all = coef.qq.flatMap(p => [p.sample, p.theoretical]);
  const lo = Math.min(...all), hi = Math.max(...all);
  const x = scale(lo, hi, pad, w - pad / 2);
  const y = scale(lo, hi, h - pad, pad / 2);
  ctx.strokeStyle = '#bbb';
  ctx.beginPath();
  ctx.moveTo(x(lo), y(lo));
  ctx.lineTo(x(hi), y(hi));
  ctx.stroke();
  ctx.fillStyle = COLORS[0];
  for (const p of coef.qq) {
    ctx.fillRect(x(p.theoretical) - 1.5, y(p.sample) - 1.5, 3, 3);
  }
  ctx.fillStyle = '#333';
  ctx.fillText(`normal QQ: ${coef.name}`, pad + 6, pad / 2 + 10);
  ctx.fillText('theoretical', w / 2, h - 8);
}

function showDistribution(view) {
  const table = document.getElementById('dist-table');
  const fmt = v => Number(v).toFixed(4);
  table.innerHTML =
    '<thead><tr><th>coef</th><th>truth</th><th>mean</th><th>sd</th><th>MSE</th></tr></thead><tbody>' +
    view.coefficients
      .map((c, k) => `<tr data-k="${k}"><td>${c.name}</td><td>${fmt(c.truth)}</td><td>${fmt(c.mean)}</td>` +
        `<td>${c.sd_defined ? fmt(c.sd) : '–'}</td><td>${fmt(c.mse)}</td></tr>`)
      .join('') +
    `</tbody><caption>${view.n_success} replications, ${view.n_failed} failed, mean a_N/δ = ${fmt(view.mean_a_n_over_gap)}. Click a row for its QQ plot.</caption>`;
  const select = k => {
    table.querySelectorAll('tbody tr').forEach(r => r.classList.toggle('selected', Number(r.dataset.k) === k));
    drawQq(view.coefficients[k]);
  };
  table.querySelectorAll('tbody tr').forEach(r => r.addEventListener('click', () => select(Number(r.dataset.k))));
  select(view.coefficients.length - 1);
}

function drawSigma(rows) {
  const canvas = document.getElementById('sigma-canvas');
  const ctx = canvas.getContext('2d');
  const { width: w, height: h } = canvas;
  const pad = 40;
  axes(ctx, w, h, pad);
  const ns = rows.map(r => r.n);
  const vals = rows.map(r => r.scaled);
  const x = scale(Math.min(...ns), Math.max(...ns), pad + 10, w - pad);
  const y = scale(0, Math.max(...vals) * 1.1, h - pad, pad / 2);
  ['identical-uniform', 'distinct-probabilities'].forEach((variant, k) => {
    const pts = rows.filter(r => r.variant === variant);
    ctx.strokeStyle = ctx.fillStyle = COLORS[k];
    ctx.beginPath();
    pts.forEach((r, i) => (i === 0 ? ctx.moveTo(x(r.n), y(r.scaled)) : ctx.lineTo(x(r.n), y(r.scaled))));
    ctx.stroke();
    pts.forEach(r => ctx.fillRect(x(r.n) - 2, y(r.scaled) - 2, 4, 4));
    ctx.fillText(variant, w - 170, pad / 2 + 14 * (k + 1));
  });
  ctx.fillStyle = '#333';
  ctx.fillText('σ_min·√N', 4, pad / 2 + 4);
  ctx.fillText('N', w / 2, h - 10);
}

function bind(id, handler) {
  const form = document.getElementById(id);
  form.addEventListener('submit', ev => {
    ev.preventDefault();
    status.textContent = 'Working…';
    // let the status paint before the synchronous call
    setTimeout(() => handler(formValues(form)), 10);
  });
  return form;
}

await init();
status.textContent = '';

const cent = bind('cent-form', v => {
  const view = call(explore_centrality, +v.n, +v.layers, +v.within, +v.between, +v.seed, v.rule);
  if (view) drawCentrality(view);
});
bind('dist-form', v => {
  const view = call(estimate_distribution, v.experiment, +v.n, +v.reps, +v.seed, v.rule);
  if (view) showDistribution(view);
});
const sigma = bind('sigma-form', v => {
  const rows = call(sigma_min_curve, v.ns, +v.seed);
  if (rows) drawSigma(rows);
});
cent.requestSubmit();
sigma.requestSubmit();
