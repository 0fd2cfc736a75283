import { TabcfClient } from "./api.js";
import { ExplorerApp } from "./app.js";

const base = new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8080";
const app = new ExplorerApp(new TabcfClient(base), document.getElementById("app")!);
void app.start();
