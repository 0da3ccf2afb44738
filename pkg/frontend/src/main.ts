// Cockpit wiring: connect, render at the display rate, forward inputs.
// URL query: ?host=…&port=…&blind=1&scale=<px per robot meter>

import { RunningStats, formatReaction, statsLine, trialLine } from "./hud.js";
import { InputPump } from "./input.js";
import { CockpitSocket, serviceUrl } from "./net.js";
import { mappingLabel, pilotInput, setMapping, trialControl } from "./protocol.js";
import { cursorToHumanFrontal, makePane, pxToWorld, scrollDepth } from "./transforms.js";
import { drawDisconnected, renderPane } from "./view.js";

const params = new URLSearchParams(window.location.search);
const scale = Number(params.get("scale") ?? "700"); // px per robot meter
const startBlind = params.get("blind") === "1";

const frontal = document.getElementById("frontal") as HTMLCanvasElement;
const sagittal = document.getElementById("sagittal") as HTMLCanvasElement;
const hudEl = document.getElementById("hud") as HTMLElement;
const statusEl = document.getElementById("status") as HTMLElement;

const paneF = makePane(frontal.width, frontal.height, scale);
const paneS = makePane(sagittal.width, sagittal.height, scale);

const stats = new RunningStats();
const flashTargets = new Set<number>();
let humanOverRobot = 1.0;
let depth = 0.0; // human-frame x target
let cursorRobot: { y: number; z: number } | null = null;
let lastEventLine = "";

const socket = new CockpitSocket(serviceUrl(params, window.location), {
  onWelcome: (w) => {
    humanOverRobot = w.config.human.arm_length / w.config.robot.arm_length;
    depth = w.config.board[0] ? w.config.board[0].center[0] * humanOverRobot : 0.0;
    statusEl.textContent = `connected as ${w.role}`;
    if (startBlind) socket.send(setMapping(null, true));
  },
  onEvent: (e) => {
    if (e.kind === "hit" && typeof e.reaction_time === "number") {
      stats.push(e.reaction_time);
      if (typeof e.target === "number") {
        flashTargets.add(e.target);
        setTimeout(() => flashTargets.delete(e.target as number), 180);
      }
      lastEventLine = `hit! reaction ${formatReaction(e.reaction_time)}`;
    } else if (e.kind === "trial_end") {
      lastEventLine = `trial done: mean ${formatReaction(e.mean ?? null)}, sd ${formatReaction(e.sd ?? null)}`;
    } else if (e.kind === "trial_start") {
      stats.reset();
      lastEventLine = `trial started (${e.trial_kind ?? ""})`;
    } else if (e.kind === "trial_aborted") {
      lastEventLine = "trial stopped";
    } else if (e.kind === "error") {
      lastEventLine = `error: ${e.message}`;
    }
  },
  onStatusChange: (up) => {
    statusEl.textContent = up ? "connected" : "disconnected - reconnecting";
  },
});
socket.connect();

const pump = new InputPump(120, (c) => {
  socket.send(pilotInput(c.eeFrontal, c.depth));
});

frontal.addEventListener("mousemove", (ev) => {
  const rect = frontal.getBoundingClientRect();
  const px = ev.clientX - rect.left;
  const py = ev.clientY - rect.top;
  const [ry, rz] = pxToWorld(paneF, px, py);
  cursorRobot = { y: ry, z: rz };
  pump.update({ eeFrontal: cursorToHumanFrontal(paneF, px, py, humanOverRobot), depth });
});

frontal.addEventListener(
  "wheel",
  (ev) => {
    ev.preventDefault();
    const reach = socket.welcome
      ? socket.welcome.config.human.l1 + socket.welcome.config.human.arm_length
      : 0.6;
    depth = scrollDepth(depth, -Math.sign(ev.deltaY), 0.01, -reach, reach);
    if (cursorRobot) {
      pump.update({
        eeFrontal: [cursorRobot.y * humanOverRobot, cursorRobot.z * humanOverRobot],
        depth,
      });
    }
  },
  { passive: false },
);

function button(id: string, handler: () => void): void {
  const el = document.getElementById(id);
  el?.addEventListener("click", handler);
}

let trialRunning = false;
button("start-seq", () => socket.send(trialControl("start", "seq", Date.now() % 100000)));
button("start-rxns", () => socket.send(trialControl("start", "rxns", Date.now() % 100000)));
button("start-rxnm", () => socket.send(trialControl("start", "rxnm", Date.now() % 100000)));
button("stop", () => socket.send(trialControl("stop")));
button("toggle-mapping", () => socket.send(setMapping("toggle")));
const blindBox = document.getElementById("blind") as HTMLInputElement | null;
if (blindBox) {
  blindBox.checked = startBlind;
  blindBox.addEventListener("change", () => socket.send(setMapping(null, blindBox.checked)));
}

function frame(): void {
  const ctxF = frontal.getContext("2d") as unknown as import("./view.js").Ctx2D;
  const ctxS = sagittal.getContext("2d") as unknown as import("./view.js").Ctx2D;
  const snap = socket.latestSnapshot;
  if (snap) {
    const opts = { flashTargets, cursor: cursorRobot, humanOverRobot };
    renderPane(ctxF, paneF, "frontal", snap, opts);
    renderPane(ctxS, paneS, "sagittal", snap, { ...opts, cursor: null });
    const running = snap.trial !== null && snap.trial.active;
    if (running !== trialRunning) {
      trialRunning = running;
      for (const id of ["start-seq", "start-rxns", "start-rxnm"]) {
        const el = document.getElementById(id) as HTMLButtonElement | null;
        if (el) el.disabled = running;
      }
    }
    hudEl.textContent = [
      mappingLabel(snap.mapping),
      trialLine(snap.trial),
      statsLine(stats),
      `last: ${formatReaction(snap.last_reaction)}`,
      lastEventLine,
    ].join("  |  ");
  }
  if (!socket.connected) {
    drawDisconnected(ctxF, paneF);
    drawDisconnected(ctxS, paneS);
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
