import { HttpReviewApi } from './api';
import { mountApp } from './app';

const params = new URLSearchParams(window.location.search);
const base = params.get('api') ?? '';
const reviewer = params.get('reviewer') ?? 'anonymous';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');
mountApp(root, new HttpReviewApi(base), reviewer);
