import type { ReviewApi } from './api';
import { interpretKey } from './keyboard';
import { scaleBoxToRender } from './overlay';
import { ReviewSession, type SessionState } from './session';
import type { Progress } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function progressLine(progress: Progress): string {
  const total = progress.pending + progress.accepted + progress.rejected + progress.edited;
  const doneCount = total - progress.pending;
  return `${doneCount}/${total} reviewed - ${progress.accepted} accepted, ` +
    `${progress.rejected} rejected, ${progress.edited} edited`;
}

export interface App {
  session: ReviewSession;
  root: HTMLElement;
}

/** Build the review UI inside `root` and start the session. */
export function mountApp(root: HTMLElement, api: ReviewApi, reviewer: string): App {
  const session = new ReviewSession(api, reviewer);

  const progress = el('div', 'progress');
  const stage = el('div', 'stage');
  const frame = el('div', 'frame');
  const image = el('img', 'subject');
  const overlay = el('div', 'overlay');
  frame.append(image, overlay);
  const expression = el('p', 'expression');
  const editBox = el('input', 'edit-box');
  editBox.type = 'text';
  editBox.placeholder = 'corrected expression, Enter to submit';
  const banner = el('div', 'banner');
  const retryButton = el('button', 'retry');
  retryButton.textContent = 'retry';
  banner.append(el('span'), retryButton);
  const help = el('div', 'help');
  help.textContent = '[a] accept   [r] reject   [e] edit   [s] skip';
  stage.append(frame, expression, editBox, banner, help);
  root.append(progress, stage);

  const positionOverlay = () => {
    const state = session.getState();
    if (state.phase !== 'reviewing' && state.phase !== 'editing') return;
    const natural = { w: image.naturalWidth, h: image.naturalHeight };
    if (!natural.w || !natural.h) return;
    const rect = scaleBoxToRender(
      state.card.sample.bbox, natural.w, natural.h, image.clientWidth, image.clientHeight);
    overlay.style.left = `${rect.left}px`;
    overlay.style.top = `${rect.top}px`;
    overlay.style.width = `${rect.width}px`;
    overlay.style.height = `${rect.height}px`;
  };
  image.addEventListener('load', positionOverlay);
  window.addEventListener('resize', positionOverlay);

  const render = (state: SessionState) => {
    banner.style.display = state.phase === 'retry' ? 'block' : 'none';
    editBox.style.display = state.phase === 'editing' ? 'block' : 'none';
    stage.dataset.phase = state.phase;
    switch (state.phase) {
      case 'loading':
        expression.textContent = 'loading...';
        break;
      case 'reviewing':
      case 'editing': {
        const { sample, progress: counts } = state.card;
        if (image.src !== state.card.imageUrl) image.src = state.card.imageUrl;
        expression.textContent = sample.text;
        progress.textContent = progressLine(counts);
        if (state.phase === 'editing') {
          editBox.value = state.draft;
          editBox.focus();
        }
        positionOverlay();
        break;
      }
      case 'retry':
        (banner.firstChild as HTMLElement).textContent =
          `request failed (${state.error}); nothing was lost - `;
        break;
      case 'done':
        expression.textContent = 'queue complete';
        progress.textContent = progressLine(state.progress);
        image.removeAttribute('src');
        overlay.style.width = '0px';
        overlay.style.height = '0px';
        break;
    }
  };
  session.onChange(render);

  retryButton.addEventListener('click', () => void session.retry());

  document.addEventListener('keydown', (event) => {
    const target = event.target as HTMLElement | null;
    const action = interpretKey({
      key: event.key,
      editing: session.getState().phase === 'editing',
      typingElsewhere:
        !!target && target !== editBox &&
        (target.tagName === 'INPUT' || target.tagName === 'TEXTAREA' || target.isContentEditable),
    });
    if (!action) return;
    event.preventDefault();
    switch (action.kind) {
      case 'accept':
        void session.decide('accept');
        break;
      case 'reject':
        void session.decide('reject');
        break;
      case 'begin-edit':
        session.beginEdit();
        break;
      case 'submit-edit':
        void session.decide('edit', editBox.value);
        break;
      case 'cancel-edit':
        session.cancelEdit();
        break;
      case 'skip':
        void session.skip();
        break;
    }
  });

  void session.start();
  return { session, root };
}
