// Demo page wiring: three independent panels over the wasm exports.

import init, { bounds_curves, delivery_demo, tdma_demo } from './pkg/cachecast_wasm.js';

const $ = (id) => document.getElementById(id);

function parseOrError(json, errorEl) {
  const data = JSON.parse(json);
  if (data.error) {
    errorEl.textContent = data.error;
    return null;
  }
  errorEl.textContent = '';
  return data;
}

// ---------------------------------------------------------------------------
// Panel 1: rate curves
// ---------------------------------------------------------------------------

function drawCurves() {
  const n = Number($('curves-n').value);
  const m = Number($('curves-m').value);
  $('curves-n-val').textContent = n;
  $('curves-m-val').textContent = m;

  const data = parseOrError(bounds_curves(n, m, 160), $('curves-error'));
  if (!data) return;

  const canvas = $('curves-canvas');
  const ctx = canvas.getContext('2d');
  const W = canvas.width, H = canvas.height;
  const pad = { l: 46, r: 12, t: 12, b: 34 };
  ctx.clearRect(0, 0, W, H);

  const pts = data.points;
  const xMin = pts[0].mem, xMax = pts[pts.length - 1].mem;
  const yMax = Math.max(...pts.map(p => Math.max(p.achievable, p.base_station)), 1e-9);
  const sx = (x) => pad.l + (x - xMin) / (xMax - xMin || 1) * (W - pad.l - pad.r);
  const sy = (y) => H - pad.b - y / yMax * (H - pad.t - pad.b);

  ctx.strokeStyle = '#2b3442';
  ctx.fillStyle = '#9aa5b5';
  ctx.font = '11px system-ui';
  ctx.lineWidth = 1;
  for (let i = 0; i <= 4; i++) {
    const y = yMax * i / 4;
    ctx.beginPath();
    ctx.moveTo(pad.l, sy(y));
    ctx.lineTo(W - pad.r, sy(y));
    ctx.stroke();
    ctx.fillText(y.toFixed(2), 6, sy(y) + 4);
  }
  for (let i = 0; i <= 5; i++) {
    const x = xMin + (xMax - xMin) * i / 5;
    ctx.fillText(x.toFixed(1), sx(x) - 8, H - 12);
  }
  ctx.fillText('cache size M (files)', W / 2 - 50, H - 2);

  const series = [
    ['achievable', '#58a6ff'],
    ['lower_bound', '#3fb950'],
    ['base_station', '#d29922'],
  ];
  for (const [key, color] of series) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    pts.forEach((p, i) => {
      const x = sx(p.mem), y = sy(p[key]);
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }

  const mid = pts[Math.floor(pts.length / 2)];
  $('curves-readout').innerHTML =
    `at M=<b>${mid.mem.toFixed(2)}</b>: rate <b>${mid.achievable.toFixed(3)}</b>, ` +
    `lower bound <b>${mid.lower_bound.toFixed(3)}</b>` +
    (mid.gap_bound ? `, gap bound <b>${mid.gap_bound.toFixed(2)}</b>` : '');
}

// ---------------------------------------------------------------------------
// Panel 2: placement and delivery walkthrough
// ---------------------------------------------------------------------------

function drawDelivery() {
  const n = Number($('dlv-n').value);
  const m = Number($('dlv-m').value);
  const quarters = Number($('dlv-M').value); // M in units of 1/4 file
  $('dlv-n-val').textContent = n;
  $('dlv-m-val').textContent = m;
  $('dlv-M-val').textContent = (quarters / 4).toFixed(2);

  const data = parseOrError(delivery_demo(n, m, quarters, 4, 7), $('dlv-error'));
  if (!data) { $('dlv-tables').innerHTML = ''; $('dlv-codewords').textContent = ''; return; }

  $('dlv-readout').innerHTML =
    `demands (round-robin files): <b>[${data.demanded_files.join(', ')}]</b> · ` +
    `measured rate <b>${data.measured_rate.toFixed(4)}</b> = closed form ` +
    `<b>${data.achievable_rate.toFixed(4)}</b> · decode ` +
    (data.decode_ok ? '<b style="color:#3fb950">bit-exact</b>' : '<b style="color:#f85149">FAILED</b>');

  let html = '';
  for (const [pi, part] of data.parts.entries()) {
    html += `<p class="hint">part ${pi}: t=${part.t}, bits ${part.bit_lo}..${part.bit_hi}, ` +
      `${part.subpackets} sub-packets per packet</p>`;
    html += '<table><tr><th>node \\ label</th>';
    for (const l of part.labels) {
      html += `<th title="group {${l.group.join(',')}}, member ${l.member}">${l.index}</th>`;
    }
    html += '</tr>';
    for (let u = 0; u < data.n; u++) {
      html += `<tr><th>${u}</th>`;
      const cached = new Set(part.cached_by_user[u]);
      for (const l of part.labels) {
        html += cached.has(l.index) ? '<td class="cached">✓</td>' : '<td></td>';
      }
      html += '</tr>';
    }
    html += '</table>';
  }
  $('dlv-tables').innerHTML = html;

  const lines = data.codewords.map(cw => {
    const terms = cw.constituents
      .map(c => `f${c.file}p${c.packet}·ℓ${c.label_index}→${c.recipient}`)
      .join(' ⊕ ');
    return `node ${cw.sender} sends [${terms}]  (${cw.payload_bits} bits: ${cw.payload_hex})`;
  });
  $('dlv-codewords').textContent =
    lines.length ? lines.join('\n') : 'everything is cached locally: nothing to transmit';
}

// ---------------------------------------------------------------------------
// Panel 3: TDMA animation
// ---------------------------------------------------------------------------

const tdmaState = { data: null, slotIdx: 0, timer: null };
const COLORS = ['#58a6ff', '#3fb950', '#d29922', '#bc8cff', '#f778ba',
                '#56d4dd', '#ffa657', '#7ee787', '#e3b341', '#a5d6ff',
                '#ff7b72', '#79c0ff', '#d2a8ff', '#ffab70', '#56d364', '#eac54f'];

function loadTdma() {
  const side = Number($('tdma-side').value);
  const gcSide = Number($('tdma-gc').value);
  $('tdma-side-val').textContent = `${side}×${side}`;
  $('tdma-gc-val').textContent = `${gcSide}×${gcSide}`;
  const delta = Number($('tdma-delta').value) / 100;
  $('tdma-delta-val').textContent = delta.toFixed(2);

  // fixed small library: m = 2 files, M = 1 per node
  const json = tdma_demo(side * side, gcSide * gcSide, 2, 1, 1, delta, 4, 7);
  const data = parseOrError(json, $('tdma-error'));
  tdmaState.data = data;
  tdmaState.slotIdx = 0;
  drawTdma();
}

function drawTdma() {
  const canvas = $('tdma-canvas');
  const ctx = canvas.getContext('2d');
  const W = canvas.width, H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const data = tdmaState.data;
  if (!data) return;

  const pad = 40;
  const sx = (x) => pad + x * (W - 2 * pad);
  const sy = (y) => pad + y * (H - 2 * pad);

  // cluster tiles tinted by color class
  const tile = data.cluster_side / data.side;
  for (const c of data.clusters) {
    ctx.fillStyle = COLORS[c.color % COLORS.length] + '22';
    ctx.strokeStyle = '#2b3442';
    const x0 = sx(c.col * tile) - 14, y0 = sy(c.row * tile) - 14;
    const w = tile * (W - 2 * pad) + (data.cluster_side > 1 ? 0 : 0) + 12;
    ctx.fillRect(x0, y0, w, tile * (H - 2 * pad) + 12);
    ctx.strokeRect(x0, y0, w, tile * (H - 2 * pad) + 12);
  }

  // active links for the current slot
  const slot = data.slots[tdmaState.slotIdx];
  if (slot) {
    ctx.strokeStyle = '#f85149';
    ctx.lineWidth = 2;
    for (const [tx, rx] of slot.links) {
      const [x1, y1] = data.positions[tx];
      const [x2, y2] = data.positions[rx];
      ctx.beginPath();
      ctx.moveTo(sx(x1), sy(y1));
      ctx.lineTo(sx(x2), sy(y2));
      ctx.stroke();
      ctx.beginPath();
      ctx.arc(sx(x1), sy(y1), 7, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }

  // nodes
  for (const [i, [x, y]] of data.positions.entries()) {
    ctx.fillStyle = '#e6e9ef';
    ctx.beginPath();
    ctx.arc(sx(x), sy(y), 4, 0, 2 * Math.PI);
    ctx.fill();
    if (data.n <= 36) {
      ctx.fillStyle = '#9aa5b5';
      ctx.font = '9px system-ui';
      ctx.fillText(i, sx(x) + 5, sy(y) - 5);
    }
  }

  const tm = data.throughput_measured, tp = data.throughput_predicted;
  $('tdma-readout').innerHTML =
    `K = <b>${data.reuse_k}</b> · r = <b>${data.range.toFixed(3)}</b> · ` +
    `t_s = <b>${data.t_s}</b> channel uses · ` +
    `slot <b>${slot ? slot.slot : '-'}</b>/${data.t_s} · ` +
    `T measured <b>${tm.toFixed(4)}</b> vs predicted <b>${tp.toFixed(4)}</b> ` +
    `· uncoded baseline <b>${data.throughput_uncoded.toFixed(4)}</b> bits/use`;
}

function stepTdma() {
  const data = tdmaState.data;
  if (!data || data.slots.length === 0) return;
  tdmaState.slotIdx = (tdmaState.slotIdx + 1) % data.slots.length;
  drawTdma();
}

function togglePlay() {
  if (tdmaState.timer) {
    clearInterval(tdmaState.timer);
    tdmaState.timer = null;
    $('tdma-play').textContent = 'play';
  } else {
    tdmaState.timer = setInterval(stepTdma, 120);
    $('tdma-play').textContent = 'pause';
  }
}

// ---------------------------------------------------------------------------

async function main() {
  await init();
  for (const id of ['curves-n', 'curves-m']) $(id).addEventListener('input', drawCurves);
  for (const id of ['dlv-n', 'dlv-m', 'dlv-M']) $(id).addEventListener('input', drawDelivery);
  for (const id of ['tdma-side', 'tdma-gc', 'tdma-delta']) $(id).addEventListener('input', loadTdma);
  $('tdma-play').addEventListener('click', togglePlay);
  $('tdma-step').addEventListener('click', stepTdma);
  drawCurves();
  drawDelivery();
  loadTdma();
}

main();
