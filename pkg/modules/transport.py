import logging
from urllib.parse import quote_plus

import requests

from modules.config import Config
from modules.errors import ConfigError, MalformedResponse, TransportError

logger = logging.getLogger('url_ranker')


def extract_path(data, path):
    """Follow a dotted path through a JSON document, mapping over lists on the way"""
    current = [data]
    for key in path.split("."):
        step = []
        for node in current:
            if isinstance(node, list):
                node_items = node
            else:
                node_items = [node]
            for item in node_items:
                if not isinstance(item, dict):
                    raise MalformedResponse(f"expected an object at {key!r}, got {type(item).__name__}")
                if key in item:
                    step.append(item[key])
        current = step

    hits = []
    for node in current:
        hits.extend(node if isinstance(node, list) else [node])
    if not all(isinstance(hit, str) for hit in hits):
        raise MalformedResponse(f"values at {path!r} are not all strings")
    return hits


class HttpTransport:
    """Endpoint-templated search API client returning result URLs in rank order"""

    def __init__(self, url_template, result_path, auth_header=None, auth_env=None,
                 session=None, timeout=30):
        if "{QUERY}" not in url_template:
            raise ConfigError("url_template needs a {QUERY} placeholder")
        self.url_template = url_template
        self.result_path = result_path
        self.auth_header = auth_header
        self.auth_env = auth_env
        self.session = session or requests.Session()
        self.timeout = timeout

    @classmethod
    def from_config(cls, http_config, session=None):
        try:
            return cls(
                url_template=http_config["url_template"],
                result_path=http_config["result_path"],
                auth_header=http_config.get("auth_header"),
                auth_env=http_config.get("auth_env"),
                session=session,
                timeout=http_config.get("timeout", 30),
            )
        except KeyError as e:
            raise ConfigError(f"http engine config is missing {e}") from e

    def _headers(self):
        if not self.auth_header:
            return {}
        token = Config.secret(self.auth_env)
        return {self.auth_header: token} if token else {}

    def fetch(self, query, urls):
        """Issue one query; the queried URLs are unused by a live engine"""
        url = self.url_template.replace("{QUERY}", quote_plus(query))
        try:
            response = self.session.get(url, headers=self._headers(), timeout=self.timeout)
            response.raise_for_status()
        except requests.RequestException as e:
            raise TransportError(f"request failed: {e}") from e

        try:
            data = response.json()
        except ValueError as e:
            raise MalformedResponse(f"response is not JSON: {e}") from e

        hits = extract_path(data, self.result_path)
        logger.debug(f"HTTP query returned {len(hits)} hits")
        return hits
