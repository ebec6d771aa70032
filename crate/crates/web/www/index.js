import init, { panelCsv, promethee, fitModel } from "./pkg/mhdis_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guarded(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

function table(head, rows) {
  const cell = (tag) => (v) => `<${tag}>${typeof v === "number" ? v.toFixed(4) : v}</${tag}>`;
  return `<table><tr>${head.map(cell("th")).join("")}</tr>${rows
    .map((r) => `<tr>${r.map(cell("td")).join("")}</tr>`)
    .join("")}</table>`;
}

function plotUtility(u, colour, ctx, w, h, range) {
  const [lo, hi] = [u.breakpoints[0], u.breakpoints[u.breakpoints.length - 1]];
  ctx.strokeStyle = colour;
  ctx.beginPath();
  u.breakpoints.forEach((g, i) => {
    const x = 20 + ((g - lo) / (hi - lo || 1)) * (w - 30);
    const y = h - 15 - (u.values[i] / range) * (h - 25);
    i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
}

function drawStage(stage) {
  const box = document.createElement("div");
  box.innerHTML = `<b>stage ${stage.stage}</b>: healthy utility in green, failure utility in red<br>`;
  stage.utilities_k.forEach((uk, i) => {
    const unk = stage.utilities_not_k[i];
    const canvas = document.createElement("canvas");
    canvas.width = 180;
    canvas.height = 120;
    const ctx = canvas.getContext("2d");
    const range = Math.max(...uk.values, ...unk.values, 1e-9);
    ctx.fillText(uk.criterion, 20, 10);
    plotUtility(uk, "#2a2", ctx, canvas.width, canvas.height, range);
    plotUtility(unk, "#c22", ctx, canvas.width, canvas.height, range);
    box.appendChild(canvas);
  });
  $("plots").appendChild(box);
}

await init();

$("gen").onclick = guarded(() => {
  $("csv").value = panelCsv(num("n"), num("sep"), num("seed"));
});

$("rank").onclick = guarded(() => {
  const out = JSON.parse(promethee($("csv").value, $("pcrit").value, $("kind").value, num("pyear"), num("scen"), num("seed")));
  const classes = out.classification.classes;
  const ids = out.flows.company_ids;
  const rows = out.flows.flows
    .map((f, i) => [ids[i], f.phi_plus, f.phi_minus, f.phi, classes[i]])
    .sort((a, b) => b[3] - a[3]);
  $("flows").innerHTML = `median cut at ${out.classification.cutoff.toFixed(4)}` + table(["company", "phi+", "phi-", "phi", "class"], rows);
});

$("fit").onclick = guarded(() => {
  const out = JSON.parse(fitModel($("csv").value, $("mcrit").value, num("myear"), num("seed")));
  const keys = ["sens", "spec", "aca", "oca", "auroc", "gini"];
  const fmt = (m) => keys.map((k) => (m[k] == null ? "n/a" : m[k]));
  $("scores").innerHTML = table(["", ...keys], [["train", ...fmt(out.train)], ["test", ...fmt(out.test)]]);
  $("plots").innerHTML = "";
  out.model.stages.forEach(drawStage);
});

$("gen").click();
