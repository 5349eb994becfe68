import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const client = new ApiClient((input, init) => fetch(input, init));
  const app = new App(root, client);
  void app.init();
}
