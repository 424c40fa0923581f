import { bootstrap } from "./app";

const root = document.getElementById("app");
if (root) bootstrap(root);
